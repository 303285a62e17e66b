/* tslint:disable */
/* eslint-disable */

export function demo_decision_curve(n: number, signal: number, seed: number, _class: number): Float64Array;

/**
 * Flattened log-Mel matrix; its length divided by `mel_bins()` is the frame count.
 */
export function demo_logmel(freq_hz: number, noise: number, seconds: number): Float64Array;

/**
 * Training points as `[x, y, label, ...]`.
 */
export function demo_toy_points(seed: number): Float64Array;

export function demo_toy_regions(n_trees: number, depth: number, grid: number, seed: number): Float64Array;

export function mel_bins(): number;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly demo_decision_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_logmel: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_toy_points: (a: number) => [number, number];
    readonly demo_toy_regions: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly mel_bins: () => number;
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
