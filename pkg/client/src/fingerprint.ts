/** Content fingerprints matching the registry's dedup identity:
 * MD5 of SKILL.md bytes plus MD5 of the newline-joined sorted listing. */

import { createHash } from "node:crypto";

import type { TarEntry } from "./tar.js";

export const SKILL_FILE = "SKILL.md";

export interface Fingerprint {
  docHash: string;
  structureHash: string;
}

function md5Hex(data: Buffer | string): string {
  return createHash("md5").update(data).digest("hex");
}

export function fingerprintEntries(entries: TarEntry[]): Fingerprint {
  const skill = entries.find((entry) => entry.name === SKILL_FILE);
  if (!skill) {
    throw new Error(`package has no ${SKILL_FILE}`);
  }
  const listing = entries
    .map((entry) => entry.name)
    .sort()
    .join("\n");
  return {
    docHash: md5Hex(skill.data),
    structureHash: md5Hex(Buffer.from(listing, "utf-8")),
  };
}
