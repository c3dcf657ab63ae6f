// Session query state and its pure transitions.
//
// Every view mutation goes through these functions, and the request a
// submission sends is exactly `toSearchRequest(state)`, so the whole
// UI-to-wire mapping is testable without a browser.

import { ImageRef, ResultRow, SearchRequest } from "./types.js";

export interface SessionQueryState {
  readonly positives: ImageRef[];
  readonly negatives: ImageRef[];
  readonly text: string;
  readonly modalityFilter: string[];
  readonly topN: number;
  readonly indexNames: string[];
  readonly lastResults: ResultRow[];
}

export function emptyState(indexNames: string[], topN = 30): SessionQueryState {
  return {
    positives: [],
    negatives: [],
    text: "",
    modalityFilter: [],
    topN,
    indexNames: [...indexNames],
    lastResults: [],
  };
}

export function refKey(ref: ImageRef): string {
  return ref.imageId !== undefined ? `id:${ref.imageId}` : `data:${ref.data}`;
}

function without(refs: ImageRef[], ref: ImageRef): ImageRef[] {
  const key = refKey(ref);
  return refs.filter((r) => refKey(r) !== key);
}

function withRef(refs: ImageRef[], ref: ImageRef): ImageRef[] {
  return [...without(refs, ref), ref];
}

/** Add as a positive example; the same image can never sit in both wells. */
export function markPositive(state: SessionQueryState, ref: ImageRef): SessionQueryState {
  return {
    ...state,
    positives: withRef(state.positives, ref),
    negatives: without(state.negatives, ref),
  };
}

/** Add as a negative example; removes the image from the positive well. */
export function markNegative(state: SessionQueryState, ref: ImageRef): SessionQueryState {
  return {
    ...state,
    positives: without(state.positives, ref),
    negatives: withRef(state.negatives, ref),
  };
}

export function unmark(state: SessionQueryState, ref: ImageRef): SessionQueryState {
  return {
    ...state,
    positives: without(state.positives, ref),
    negatives: without(state.negatives, ref),
  };
}

export function setText(state: SessionQueryState, text: string): SessionQueryState {
  return { ...state, text };
}

export function setModalityFilter(state: SessionQueryState, tags: string[]): SessionQueryState {
  return { ...state, modalityFilter: [...new Set(tags)].sort() };
}

export function toggleModality(state: SessionQueryState, tag: string): SessionQueryState {
  const current = new Set(state.modalityFilter);
  if (current.has(tag)) {
    current.delete(tag);
  } else {
    current.add(tag);
  }
  return setModalityFilter(state, [...current]);
}

export function setTopN(state: SessionQueryState, topN: number): SessionQueryState {
  if (!Number.isInteger(topN) || topN < 1 || topN > 1000) {
    throw new Error(`topN out of range: ${topN}`);
  }
  return { ...state, topN };
}

export function applyResults(state: SessionQueryState, results: ResultRow[]): SessionQueryState {
  return { ...state, lastResults: [...results] };
}

/** Start a fresh query with one image as the sole positive example. */
export function searchSimilar(state: SessionQueryState, ref: ImageRef): SessionQueryState {
  return {
    ...state,
    positives: [ref],
    negatives: [],
    text: "",
  };
}

export function canSubmit(state: SessionQueryState): boolean {
  return state.positives.length > 0 || state.text.trim().length > 0;
}

/** The exact body submitted to POST /search. */
export function toSearchRequest(state: SessionQueryState): SearchRequest {
  return {
    positives: state.positives.map((r) => ({ ...r })),
    negatives: state.negatives.map((r) => ({ ...r })),
    text: state.text.trim().length > 0 ? state.text.trim() : null,
    modalities: state.modalityFilter.length > 0 ? [...state.modalityFilter] : null,
    topN: state.topN,
    indexNames: [...state.indexNames],
  };
}
