/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_codecrun_free: (a: number, b: number) => void;
export const codecrun_inputAudio: (a: number) => [number, number];
export const codecrun_new: (a: number, b: number, c: number, d: bigint) => [number, number, number];
export const codecrun_outputAudio: (a: number) => [number, number];
export const codecrun_summaryJson: (a: number) => [number, number, number, number];
export const lbgDemo: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const lspView: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
