/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const bunker_bounds: (a: number, b: number, c: number) => [number, number, number, number];
export const calibrated_surprise: (a: number, b: number, c: bigint, d: bigint) => [number, number, number];
export const calibration_curve: (a: number, b: number, c: number) => [number, number, number, number];
export const window_condition: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
