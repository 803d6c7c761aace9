/* tslint:disable */
/* eslint-disable */

/**
 * A small graph advanced one step at a time.
 */
export class Stepper {
    free(): void;
    [Symbol.dispose](): void;
    constructor(n: number, p: number, q: number, r: number, seed: bigint);
    /**
     * Advances one step and returns the new view.
     */
    step(): string;
    /**
     * Current graph and its exact next-step law.
     */
    view(): string;
}

export function growth(n: number, p: number, q: number, r: number, steps: bigint, seed: bigint): string;

export function sequences(alpha: number, k: bigint, n_max: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_stepper_free: (a: number, b: number) => void;
    readonly growth: (a: number, b: number, c: number, d: number, e: bigint, f: bigint) => [number, number, number, number];
    readonly sequences: (a: number, b: bigint, c: bigint) => [number, number, number, number];
    readonly stepper_new: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
    readonly stepper_step: (a: number) => [number, number, number, number];
    readonly stepper_view: (a: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
