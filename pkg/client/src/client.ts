/** Thin client over the registry HTTP API.
 *
 * No local pipeline logic: every call maps 1:1 onto one endpoint and
 * returns the server's JSON untouched (never reordered, never filtered).
 * Downloads verify recomputed fingerprints against the registry's
 * metadata before a single byte is written.
 */

import { mkdir, readFile, readdir, stat, writeFile } from "node:fs/promises";
import { dirname, join, relative } from "node:path";

import { ApiError, ConnectivityError, IntegrityError, errorFromBody } from "./errors.js";
import { SKILL_FILE, fingerprintEntries } from "./fingerprint.js";
import { buildTar, readTar, type TarEntry } from "./tar.js";
import type {
  ApiErrorBody,
  ClientConfig,
  ContributionResult,
  RegistryStats,
  RelationEdge,
  SearchHit,
  SearchOptions,
  SkillMetadata,
} from "./types.js";

const DEFAULT_TIMEOUT_MS = 10_000;
const DEFAULT_RETRIES = 2;

interface RequestSpec {
  method: "GET" | "POST";
  path: string;
  /** retries apply only to GET and POST /v1/search */
  idempotent: boolean;
  body?: Buffer | string;
  contentType?: string;
}

export class RegistryClient {
  private readonly baseUrl: string;
  private readonly timeoutMs: number;
  private readonly retryCount: number;
  private readonly authToken?: string;

  constructor(config: ClientConfig) {
    this.baseUrl = config.baseUrl.replace(/\/+$/, "");
    this.timeoutMs = config.timeoutMs ?? DEFAULT_TIMEOUT_MS;
    this.retryCount = config.retryCount ?? DEFAULT_RETRIES;
    this.authToken = config.authToken;
  }

  async search(query: string, options: SearchOptions = {}): Promise<SearchHit[]> {
    const body: Record<string, unknown> = {
      query,
      mode: options.mode ?? "hybrid",
    };
    if (options.category !== undefined) body.category = options.category;
    if (options.tags !== undefined) body.tags = options.tags;
    if (options.topK !== undefined) body.top_k = options.topK;
    const reply = await this.requestJson<{ results: SearchHit[] }>({
      method: "POST",
      path: "/v1/search",
      idempotent: true,
      body: JSON.stringify(body),
      contentType: "application/json",
    });
    return reply.results;
  }

  async getSkill(id: string): Promise<SkillMetadata> {
    return this.requestJson<SkillMetadata>({
      method: "GET",
      path: `/v1/skills/${encodeURIComponent(id)}`,
      idempotent: true,
    });
  }

  async downloadArchive(id: string): Promise<Buffer> {
    const response = await this.request({
      method: "GET",
      path: `/v1/skills/${encodeURIComponent(id)}/archive`,
      idempotent: true,
    });
    return Buffer.from(await response.arrayBuffer());
  }

  /** Fetch, verify fingerprints, then extract into destDir/<id>. Nothing
   * is written when verification fails. */
  async download(id: string, destDir: string): Promise<string> {
    const metadata = await this.getSkill(id);
    const archive = await this.downloadArchive(id);
    const entries = readTar(archive);
    const fingerprint = fingerprintEntries(entries);
    if (
      fingerprint.docHash !== metadata.doc_hash ||
      fingerprint.structureHash !== metadata.structure_hash
    ) {
      throw new IntegrityError(
        `archive fingerprint mismatch for ${id}: ` +
          `doc ${fingerprint.docHash} vs ${metadata.doc_hash}, ` +
          `structure ${fingerprint.structureHash} vs ${metadata.structure_hash}`,
      );
    }
    const target = join(destDir, id);
    for (const entry of entries) {
      const path = join(target, entry.name);
      await mkdir(dirname(path), { recursive: true });
      await writeFile(path, entry.data);
    }
    return target;
  }

  async contribute(packageDir: string): Promise<ContributionResult> {
    const entries = await collectEntries(packageDir);
    if (!entries.some((entry) => entry.name === SKILL_FILE)) {
      throw new IntegrityError(`${packageDir} has no ${SKILL_FILE}`);
    }
    return this.requestJson<ContributionResult>({
      method: "POST",
      path: "/v1/skills",
      idempotent: false,
      body: buildTar(entries),
      contentType: "application/x-tar",
    });
  }

  async relations(id: string): Promise<RelationEdge[]> {
    const reply = await this.requestJson<{ skill_id: string; relations: RelationEdge[] }>({
      method: "GET",
      path: `/v1/skills/${encodeURIComponent(id)}/relations`,
      idempotent: true,
    });
    return reply.relations;
  }

  async stats(): Promise<RegistryStats> {
    return this.requestJson<RegistryStats>({
      method: "GET",
      path: "/v1/stats",
      idempotent: true,
    });
  }

  private async requestJson<T>(spec: RequestSpec): Promise<T> {
    const response = await this.request(spec);
    return (await response.json()) as T;
  }

  private async request(spec: RequestSpec): Promise<Response> {
    const attempts = spec.idempotent ? this.retryCount + 1 : 1;
    let lastError: unknown;
    for (let attempt = 0; attempt < attempts; attempt++) {
      const controller = new AbortController();
      const timer = setTimeout(() => controller.abort(), this.timeoutMs);
      try {
        const headers: Record<string, string> = {};
        if (spec.contentType) headers["content-type"] = spec.contentType;
        if (this.authToken) headers.authorization = `Bearer ${this.authToken}`;
        const init: Parameters<typeof fetch>[1] = {
          method: spec.method,
          headers,
          signal: controller.signal,
        };
        if (spec.body !== undefined) init.body = spec.body;
        const response = await fetch(this.baseUrl + spec.path, init);
        if (!response.ok) {
          throw errorFromBody((await response.json()) as ApiErrorBody);
        }
        return response;
      } catch (error) {
        if (error instanceof ApiError) throw error; // server spoke; don't retry
        lastError = error;
      } finally {
        clearTimeout(timer);
      }
    }
    throw new ConnectivityError(
      `${spec.method} ${spec.path} failed after ${attempts} attempt(s): ${String(lastError)}`,
    );
  }
}

async function collectEntries(root: string): Promise<TarEntry[]> {
  const names: string[] = [];
  async function walk(dir: string): Promise<void> {
    for (const item of await readdir(dir)) {
      const path = join(dir, item);
      const info = await stat(path);
      if (info.isDirectory()) {
        await walk(path);
      } else if (info.isFile()) {
        names.push(relative(root, path).split("\\").join("/"));
      }
    }
  }
  await walk(root);
  names.sort();
  const entries: TarEntry[] = [];
  for (const name of names) {
    entries.push({ name, data: await readFile(join(root, name)) });
  }
  return entries;
}
