// Wires the three views to the session state and the search client.

import { SearchClient } from "./client.js";
import {
  applyResults,
  emptyState,
  markNegative,
  markPositive,
  searchSimilar,
  SessionQueryState,
  setText,
  toggleModality,
  toSearchRequest,
  unmark,
} from "./state.js";
import { ImageRef } from "./types.js";
import { DetailsView } from "./views/details.js";
import { QueryView } from "./views/query.js";
import { ResultsView } from "./views/results.js";

const MODALITY_TAGS = ["xray", "ct", "mri", "ultrasound", "photo", "microscopy"];

export async function startApp(root: HTMLElement, baseUrl: string): Promise<void> {
  const client = new SearchClient(baseUrl);
  const indexNames = await client.indices();
  let state: SessionQueryState = emptyState(indexNames);

  root.innerHTML = `
    <header><h1>image search</h1><span class="indices">indices: ${indexNames.join(", ")}</span></header>
    <main>
      <section id="query"></section>
      <section id="results"></section>
      <section id="details"></section>
    </main>`;

  const update = (next: SessionQueryState) => {
    state = next;
    queryView.render(state);
  };

  const submit = async () => {
    try {
      const response = await client.search(toSearchRequest(state));
      update(applyResults(state, response.results));
      resultsView.render(state.lastResults);
    } catch (error) {
      if ((error as Error).name !== "AbortError") {
        console.error(error);
      }
    }
  };

  const queryView = new QueryView(root.querySelector("#query")!, MODALITY_TAGS, {
    onText: (text) => update(setText(state, text)),
    onMarkPositive: (ref: ImageRef) => update(markPositive(state, ref)),
    onMarkNegative: (ref: ImageRef) => update(markNegative(state, ref)),
    onUnmark: (ref: ImageRef) => update(unmark(state, ref)),
    onToggleModality: (tag) => update(toggleModality(state, tag)),
    onSubmit: submit,
  });

  const resultsView = new ResultsView(root.querySelector("#results")!, {
    onMarkPositive: (imageId) => update(markPositive(state, { imageId })),
    onMarkNegative: (imageId) => update(markNegative(state, { imageId })),
    onSelect: (row) => detailsView.render(row),
  });

  const detailsView = new DetailsView(root.querySelector("#details")!, {
    onSearchSimilar: (imageId) => {
      update(searchSimilar(state, { imageId }));
      void submit();
    },
  });

  queryView.render(state);
}
