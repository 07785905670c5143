/* tslint:disable */
/* eslint-disable */

/**
 * Sort frame, automorphism group and orbit structure of a graph6 graph,
 * plus the same data for a random relabelling to show `F(hG) = F(G)h⁻¹`.
 */
export function graph_demo(graph6: string, relabel_seed: number): string;

/**
 * PCA frame of a planar cloud and of its copy rotated by `angle` radians
 * (and mirrored when `mirror` is set). Shows that the canonical poses and
 * the frame-averaged readout agree while the raw readout does not.
 */
export function pca_demo(points: string, angle: number, mirror: boolean, proper: boolean): string;

/**
 * Frame-stability curve: mean distance between PCA frames of clean and
 * noisy random clouds for each noise level in `sigmas` (comma separated).
 */
export function stability_demo(seed: number, clouds: number, points: number, sigmas: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly graph_demo: (a: number, b: number, c: number) => [number, number, number, number];
    readonly pca_demo: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly stability_demo: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
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
