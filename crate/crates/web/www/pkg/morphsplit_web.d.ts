/* tslint:disable */
/* eslint-disable */

/**
 * Random and adversarial splits of a fresh synthetic corpus, with the
 * morpheme-distribution distance each achieves.
 */
export function compare_splits(stems: number, suffixes: number, words: number, eval_share: number, seed: bigint): string;

/**
 * The first `count` training words, written as `m1+m2+...`.
 */
export function demo_words(count: number): string;

/**
 * Label sequence of a `+`-separated segmentation such as `walk+ed`.
 */
export function encode_segmentation(segmented: string): string;

/**
 * Segments `word` with each built-in model trained on the demo corpus.
 */
export function segment_word(word: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly compare_splits: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly demo_words: (a: number) => [number, number, number, number];
    readonly encode_segmentation: (a: number, b: number) => [number, number, number, number];
    readonly segment_word: (a: number, b: number) => [number, number, number, number];
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
