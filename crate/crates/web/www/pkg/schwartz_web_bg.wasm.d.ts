/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_spectrum_free: (a: number, b: number) => void;
export const husimi: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const spectrum_density: (a: number, b: number) => number;
export const spectrum_eigenvalues: (a: number) => [number, number];
export const spectrum_limit: (a: number, b: number, c: number) => [number, number, number];
export const spectrum_mass: (a: number, b: number, c: number) => number;
export const spectrum_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const spectrum_weights: (a: number) => [number, number];
export const wigner: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
