/* tslint:disable */
/* eslint-disable */

/**
 * Eigenvalues of Q_M with the weights Tr[T E_M({λ})].
 */
export class Spectrum {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * K^T(q, q), for drawing the limiting density.
     */
    density(q: number): number;
    eigenvalues(): Float64Array;
    /**
     * The limit ∫_a^b K^T(q, q) dq.
     */
    limit(a: number, b: number): number;
    /**
     * Tr[T E_M([a, b])].
     */
    mass(a: number, b: number): number;
    constructor(spec: string, cutoff: number, m: number);
    weights(): Float64Array;
}

/**
 * Husimi function ⟨x|T|x⟩ on the same layout as `wigner`.
 */
export function husimi(spec: string, cutoff: number, extent: number, cells: number): Float64Array;

/**
 * Wigner function of a named state on [−extent, extent]², `cells` per axis.
 */
export function wigner(spec: string, cutoff: number, extent: number, cells: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_spectrum_free: (a: number, b: number) => void;
    readonly husimi: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly spectrum_density: (a: number, b: number) => number;
    readonly spectrum_eigenvalues: (a: number) => [number, number];
    readonly spectrum_limit: (a: number, b: number, c: number) => [number, number, number];
    readonly spectrum_mass: (a: number, b: number, c: number) => number;
    readonly spectrum_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly spectrum_weights: (a: number) => [number, number];
    readonly wigner: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
