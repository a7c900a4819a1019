/* tslint:disable */
/* eslint-disable */

/**
 * Number of windows covering each voxel of an `nx * ny` plane, x fastest.
 */
export function coverage_map(nx: number, ny: number, wx: number, wy: number, sx: number, sy: number): Uint32Array;

/**
 * Middle axial slice of a low-contrast phantom before and after MCLAHE,
 * each rescaled to `[0, 1]`; the first `n * n` values are the input.
 */
export function mclahe_preview(n: number, tiles_xy: number, clip_limit: number, seed: bigint): Float32Array;

/**
 * rDSC of a random blob with the given mean radius under every study
 * strategy, as JSON `[{"strategy": ..., "rdsc": ...}, ...]`.
 */
export function rdsc_explorer(radius_mm: number, sx: number, sy: number, sz: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly coverage_map: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly mclahe_preview: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly rdsc_explorer: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
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
