/* tslint:disable */
/* eslint-disable */

/**
 * One encode/decode run of a synthetic utterance.
 */
export class CodecRun {
    free(): void;
    [Symbol.dispose](): void;
    inputAudio(): Float32Array;
    constructor(version: string, seconds: number, seed: bigint);
    outputAudio(): Float32Array;
    summaryJson(): string;
}

export function lbgDemo(points: number, clusters: number, size: number, seed: bigint): string;

export function lspView(lsp: Float64Array, version: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_codecrun_free: (a: number, b: number) => void;
    readonly codecrun_inputAudio: (a: number) => [number, number];
    readonly codecrun_new: (a: number, b: number, c: number, d: bigint) => [number, number, number];
    readonly codecrun_outputAudio: (a: number) => [number, number];
    readonly codecrun_summaryJson: (a: number) => [number, number, number, number];
    readonly lbgDemo: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly lspView: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
