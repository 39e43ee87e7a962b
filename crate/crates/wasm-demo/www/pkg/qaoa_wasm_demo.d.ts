/* tslint:disable */
/* eslint-disable */

/**
 * Approximation ratio after each feedback layer.
 */
export function falqon(graph: string, layers: number, dt: number): string;

/**
 * `{n, edges: [[i, j, w]], c_max, optimal_cut}` for `complete`, `cycle`,
 * `regular` (degree 3) or `random` (edge probability 1/2).
 */
export function generateGraph(family: string, n: number, seed: number): string;

/**
 * Approximation ratio of depth-1 QAOA on a `resolution x resolution` grid.
 */
export function landscape(graph: string, resolution: number): string;

/**
 * Optimises one variant from a random start and reports the result.
 */
export function solve(graph: string, variant: string, p: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly falqon: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly generateGraph: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly landscape: (a: number, b: number, c: number) => [number, number, number, number];
    readonly solve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
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
