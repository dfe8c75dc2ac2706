export { RegistryClient } from "./client.js";
export {
  ApiError,
  BadRequestError,
  ConnectivityError,
  DuplicateError,
  IntegrityError,
  NotFoundError,
  RegistryClientError,
  RejectedError,
} from "./errors.js";
export { SKILL_FILE, fingerprintEntries, type Fingerprint } from "./fingerprint.js";
export { TarError, buildTar, readTar, type TarEntry } from "./tar.js";
export type {
  ApiErrorBody,
  ClientConfig,
  ContributionResult,
  RegistryStats,
  RelationEdge,
  SearchHit,
  SearchMode,
  SearchOptions,
  SkillMetadata,
} from "./types.js";
