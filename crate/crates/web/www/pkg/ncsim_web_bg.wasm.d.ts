/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_stepper_free: (a: number, b: number) => void;
export const growth: (a: number, b: number, c: number, d: number, e: bigint, f: bigint) => [number, number, number, number];
export const sequences: (a: number, b: bigint, c: bigint) => [number, number, number, number];
export const stepper_new: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
export const stepper_step: (a: number) => [number, number, number, number];
export const stepper_view: (a: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
