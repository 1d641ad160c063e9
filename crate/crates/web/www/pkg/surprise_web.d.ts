/* tslint:disable */
/* eslint-disable */

/**
 * Bounds of `Bel(M | P /\ E)` for the bunker with evidence strengths `c`
 * and `d`, as `[lo, hi, lo_open, hi_open]`.
 */
export function bunker_bounds(c: number, d: number, independence: boolean): Float64Array;

/**
 * Surprise of one announced ratio under the recorded curve.
 */
export function calibrated_surprise(text: string, x: bigint, y: bigint): number;

/**
 * Curve through the recorded entries, sampled at `samples` evenly spaced
 * log ratios from 1:1 to 10⁹:1. Returns `[log_ratio, surprise, ...]`.
 */
export function calibration_curve(text: string, samples: number): Float64Array;

/**
 * The window example's masses conditioned on `formula`, one focal
 * element per line, followed by the surprise at the evidence.
 */
export function window_condition(formula: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bunker_bounds: (a: number, b: number, c: number) => [number, number, number, number];
    readonly calibrated_surprise: (a: number, b: number, c: bigint, d: bigint) => [number, number, number];
    readonly calibration_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly window_condition: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
