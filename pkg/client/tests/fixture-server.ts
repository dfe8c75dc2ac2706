/** In-process fixture registry speaking the documented JSON contracts. */

import { createServer, type Server } from "node:http";
import type { AddressInfo } from "node:net";

import { fingerprintEntries } from "../src/fingerprint.js";
import { buildTar, readTar, type TarEntry } from "../src/tar.js";

const SKILL_MD = Buffer.from(
  `---
name: fixture-skill
description: deterministic fixture served by the test registry
category: Testing
tags: fixture, demo
version: 0.1.0
---
Steps:
1. Run the bundled script.
2. Check its output.
`,
  "utf-8",
);

export const FIXTURE_ENTRIES: TarEntry[] = [
  { name: "SKILL.md", data: SKILL_MD },
  { name: "run.py", data: Buffer.from("print('fixture')\n", "utf-8") },
];

const fingerprint = fingerprintEntries(FIXTURE_ENTRIES);
export const FIXTURE_ID = `fixture-skill--${fingerprint.docHash.slice(0, 8)}`;
export const TAMPERED_ID = "tampered-skill--deadbeef";

export const FIXTURE_METADATA = {
  skill_id: FIXTURE_ID,
  name: "fixture-skill",
  description: "deterministic fixture served by the test registry",
  category: "Testing",
  tags: ["fixture", "demo"],
  version: "0.1.0",
  doc_hash: fingerprint.docHash,
  structure_hash: fingerprint.structureHash,
  grades: {
    safety: "good",
    completeness: "average",
    executability: "good",
    maintainability: "good",
    cost_awareness: "average",
  },
  created_at: "2026-08-11T00:00:00+00:00",
  updated_at: "2026-08-11T00:00:00+00:00",
};

const SEARCH_RESULTS = {
  results: [
    {
      skill_id: FIXTURE_ID,
      name: "fixture-skill",
      description: "deterministic fixture served by the test registry",
      category: "Testing",
      tags: ["fixture", "demo"],
      score: 0.91234,
    },
    {
      skill_id: "second-skill--00000001",
      name: "second-skill",
      description: "a second row so ordering is observable",
      category: "Other",
      tags: [],
      score: 0.25,
    },
  ],
};

const STATS = {
  total_skills: 2,
  per_category: { Testing: 1, Other: 1 },
  per_dimension: { safety: { good: 2, average: 0, poor: 0 } },
};

const RELATIONS = {
  skill_id: FIXTURE_ID,
  relations: [
    {
      src: FIXTURE_ID,
      dst: "second-skill--00000001",
      rel: "compose_with",
      confidence: 0.5,
      provenance: "trace_alignment",
    },
  ],
};

function apiError(status: number, code: string, message: string) {
  return { status, body: JSON.stringify({ status, code, message }) };
}

export interface FixtureRegistry {
  url: string;
  server: Server;
  contributions: string[];
  close(): Promise<void>;
}

export async function startFixtureRegistry(): Promise<FixtureRegistry> {
  const seenDocHashes = new Set<string>([fingerprint.docHash]);
  const contributions: string[] = [];

  const server = createServer((req, res) => {
    const chunks: Buffer[] = [];
    req.on("data", (chunk) => chunks.push(chunk));
    req.on("end", () => {
      const body = Buffer.concat(chunks);
      const route = `${req.method} ${req.url}`;

      const send = (status: number, payload: string, type = "application/json") => {
        res.writeHead(status, { "content-type": type });
        res.end(payload);
      };

      if (route === "POST /v1/search") {
        return send(200, JSON.stringify(SEARCH_RESULTS));
      }
      if (route === `GET /v1/skills/${FIXTURE_ID}`) {
        return send(200, JSON.stringify(FIXTURE_METADATA));
      }
      if (route === `GET /v1/skills/${TAMPERED_ID}`) {
        // advertises the honest fingerprints but serves doctored bytes
        return send(200, JSON.stringify({ ...FIXTURE_METADATA, skill_id: TAMPERED_ID }));
      }
      if (route === `GET /v1/skills/${FIXTURE_ID}/archive`) {
        const tar = buildTar(FIXTURE_ENTRIES);
        res.writeHead(200, { "content-type": "application/x-tar" });
        return res.end(tar);
      }
      if (route === `GET /v1/skills/${TAMPERED_ID}/archive`) {
        const doctored = FIXTURE_ENTRIES.map((entry) =>
          entry.name === "SKILL.md"
            ? { name: entry.name, data: Buffer.concat([entry.data, Buffer.from("\ninjected\n")]) }
            : entry,
        );
        res.writeHead(200, { "content-type": "application/x-tar" });
        return res.end(buildTar(doctored));
      }
      if (route === `GET /v1/skills/${FIXTURE_ID}/relations`) {
        return send(200, JSON.stringify(RELATIONS));
      }
      if (route === "GET /v1/stats") {
        return send(200, JSON.stringify(STATS));
      }
      if (route === "POST /v1/skills") {
        let entries;
        try {
          entries = readTar(body);
        } catch {
          const err = apiError(400, "MalformedArchive", "unreadable archive");
          return send(err.status, err.body);
        }
        const skill = entries.find((e) => e.name === "SKILL.md");
        if (!skill) {
          const err = apiError(400, "MalformedArchive", "archive has no SKILL.md");
          return send(err.status, err.body);
        }
        const fp = fingerprintEntries(entries);
        if (seenDocHashes.has(fp.docHash)) {
          const err = apiError(
            409,
            "Duplicate",
            `fingerprint-identical skill already exists: ${FIXTURE_ID}`,
          );
          return send(err.status, err.body);
        }
        if (skill.data.toString("utf-8").includes("rm -rf /")) {
          const err = apiError(
            422,
            "Rejected",
            "admission policy rejected: safety=poor, completeness=good, executability=average, maintainability=good, cost_awareness=good",
          );
          return send(err.status, err.body);
        }
        seenDocHashes.add(fp.docHash);
        const id = `contributed--${fp.docHash.slice(0, 8)}`;
        contributions.push(id);
        return send(
          201,
          JSON.stringify({
            skill_id: id,
            grades: { safety: "good", completeness: "good", executability: "average", maintainability: "good", cost_awareness: "good" },
          }),
        );
      }
      const err = apiError(404, "UnknownSkill", `no route for ${route}`);
      send(err.status, err.body);
    });
  });

  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  const { port } = server.address() as AddressInfo;
  return {
    url: `http://127.0.0.1:${port}`,
    server,
    contributions,
    close: () => new Promise((resolve) => server.close(() => resolve())),
  };
}

/** A server that destroys the first `failures` connections, then delegates. */
export async function startFlakyFront(target: string, failures: number): Promise<FixtureRegistry> {
  let remaining = failures;
  const server = createServer(async (req, res) => {
    if (remaining > 0) {
      remaining -= 1;
      req.socket.destroy();
      return;
    }
    const chunks: Buffer[] = [];
    req.on("data", (chunk) => chunks.push(chunk));
    req.on("end", async () => {
      const upstream = await fetch(target + req.url, {
        method: req.method,
        headers: { "content-type": req.headers["content-type"] ?? "application/json" },
        body: ["POST", "PUT"].includes(req.method ?? "") ? Buffer.concat(chunks) : undefined,
      });
      res.writeHead(upstream.status, { "content-type": upstream.headers.get("content-type") ?? "" });
      res.end(Buffer.from(await upstream.arrayBuffer()));
    });
  });
  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  const { port } = server.address() as AddressInfo;
  return {
    url: `http://127.0.0.1:${port}`,
    server,
    contributions: [],
    close: () => new Promise((resolve) => server.close(() => resolve())),
  };
}
