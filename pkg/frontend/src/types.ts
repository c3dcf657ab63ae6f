// Wire types of the search service JSON API.

export interface ImageRef {
  imageId?: string;
  data?: string; // base64 payload for uploaded images
}

export interface SearchRequest {
  positives: ImageRef[];
  negatives: ImageRef[];
  text: string | null;
  modalities: string[] | null;
  topN: number;
  indexNames: string[];
}

export interface ResultRow {
  imageId: string;
  score: number;
  rank: number;
  uri: string | null;
  caption: string | null;
  modality: string | null;
  articleUri: string | null;
}

export interface SearchResponse {
  results: ResultRow[];
}
