/** Wire types, mirrored 1:1 from the registry's documented JSON contracts. */

export type SearchMode = "keyword" | "vector" | "hybrid";

export interface SearchHit {
  skill_id: string;
  name: string;
  description: string;
  category: string;
  tags: string[];
  score: number;
}

export interface SearchOptions {
  mode?: SearchMode;
  category?: string;
  tags?: string[];
  topK?: number;
}

export interface SkillMetadata {
  skill_id: string;
  name: string;
  description: string;
  category: string;
  tags: string[];
  version: string;
  doc_hash: string;
  structure_hash: string;
  grades: Record<string, string>;
  created_at: string;
  updated_at: string;
}

export interface ContributionResult {
  skill_id: string;
  grades: Record<string, string>;
}

export interface RelationEdge {
  src: string;
  dst: string;
  rel: string;
  confidence: number;
  provenance: string;
}

export interface RegistryStats {
  total_skills: number;
  per_category: Record<string, number>;
  per_dimension: Record<string, Record<string, number>>;
}

export interface ApiErrorBody {
  status: number;
  code: string;
  message: string;
}

export interface ClientConfig {
  baseUrl: string;
  /** request timeout, default 10000 ms */
  timeoutMs?: number;
  /** retries for idempotent requests (GET and POST /v1/search), default 2 */
  retryCount?: number;
  authToken?: string;
}
