// Thin fetch wrapper around the search service.
//
// One search is in flight per session: a newer submission aborts the
// pending one, whose caller sees an AbortError.

import { SearchRequest, SearchResponse } from "./types.js";

export class SearchClient {
  private pending: AbortController | null = null;

  constructor(private readonly baseUrl: string) {}

  async search(body: SearchRequest): Promise<SearchResponse> {
    if (this.pending) {
      this.pending.abort();
    }
    const controller = new AbortController();
    this.pending = controller;
    try {
      const response = await fetch(`${this.baseUrl}/search`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
        signal: controller.signal,
      });
      if (!response.ok) {
        const detail = await response.text();
        throw new Error(`search failed (${response.status}): ${detail}`);
      }
      return (await response.json()) as SearchResponse;
    } finally {
      if (this.pending === controller) {
        this.pending = null;
      }
    }
  }

  async indices(): Promise<string[]> {
    const response = await fetch(`${this.baseUrl}/indices`);
    if (!response.ok) {
      throw new Error(`listing indices failed (${response.status})`);
    }
    const body = (await response.json()) as { indices: string[] };
    return body.indices;
  }
}

/** Read a dropped or picked file into the base64 payload the API expects. */
export function fileToImageRef(file: File): Promise<{ data: string }> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onerror = () => reject(reader.error);
    reader.onload = () => {
      const url = reader.result as string; // data:<mime>;base64,<payload>
      const comma = url.indexOf(",");
      resolve({ data: url.slice(comma + 1) });
    };
    reader.readAsDataURL(file);
  });
}
