/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const demo_decision_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const demo_logmel: (a: number, b: number, c: number) => [number, number, number, number];
export const demo_toy_points: (a: number) => [number, number];
export const demo_toy_regions: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const mel_bins: () => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
