// Shared type re-exports for the test suites.

export type { SessionQueryState } from "../src/state";
export type { ResultRow, SearchResponse } from "../src/types";
