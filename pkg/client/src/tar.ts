/** Minimal USTAR reader/writer.
 *
 * Just enough tar to read registry archives and pack package directories
 * for contribution: regular files only, names under 100 chars (plus the
 * ustar prefix field on read), zero timestamps on write.
 */

export interface TarEntry {
  name: string;
  data: Buffer;
}

export class TarError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "TarError";
  }
}

const BLOCK = 512;

function octal(value: number, width: number): Buffer {
  const field = Buffer.alloc(width, 0);
  field.write(value.toString(8).padStart(width - 1, "0"), 0, "ascii");
  return field;
}

function headerFor(name: string, size: number): Buffer {
  if (Buffer.byteLength(name) > 100) {
    throw new TarError(`entry name too long for ustar: ${name}`);
  }
  const header = Buffer.alloc(BLOCK, 0);
  header.write(name, 0, "utf-8");
  octal(0o644, 8).copy(header, 100); // mode
  octal(0, 8).copy(header, 108); // uid
  octal(0, 8).copy(header, 116); // gid
  octal(size, 12).copy(header, 124);
  octal(0, 12).copy(header, 136); // mtime: fixed zero for determinism
  header.fill(" ", 148, 156); // checksum placeholder
  header.write("0", 156, "ascii"); // typeflag: regular file
  header.write("ustar\0", 257, "ascii");
  header.write("00", 263, "ascii");
  octal(0, 8).copy(header, 329); // devmajor
  octal(0, 8).copy(header, 337); // devminor

  let sum = 0;
  for (const byte of header) sum += byte;
  header.write(sum.toString(8).padStart(6, "0") + "\0 ", 148, "ascii");
  return header;
}

export function buildTar(entries: TarEntry[]): Buffer {
  const chunks: Buffer[] = [];
  for (const entry of entries) {
    chunks.push(headerFor(entry.name, entry.data.length));
    chunks.push(entry.data);
    const overhang = entry.data.length % BLOCK;
    if (overhang) chunks.push(Buffer.alloc(BLOCK - overhang, 0));
  }
  chunks.push(Buffer.alloc(2 * BLOCK, 0));
  return Buffer.concat(chunks);
}

function readString(block: Buffer, offset: number, length: number): string {
  const slice = block.subarray(offset, offset + length);
  const end = slice.indexOf(0);
  return slice.subarray(0, end === -1 ? length : end).toString("utf-8");
}

function readOctal(block: Buffer, offset: number, length: number): number {
  const text = readString(block, offset, length).trim();
  if (text === "") return 0;
  const value = parseInt(text, 8);
  if (Number.isNaN(value)) {
    throw new TarError(`bad octal field at ${offset}: ${JSON.stringify(text)}`);
  }
  return value;
}

function verifyChecksum(header: Buffer): void {
  const stored = readOctal(header, 148, 8);
  let sum = 0;
  for (let i = 0; i < BLOCK; i++) {
    sum += i >= 148 && i < 156 ? 0x20 : header[i];
  }
  if (sum !== stored) {
    throw new TarError(`header checksum mismatch (${sum} != ${stored})`);
  }
}

export function readTar(data: Buffer): TarEntry[] {
  const entries: TarEntry[] = [];
  let offset = 0;
  while (offset + BLOCK <= data.length) {
    const header = data.subarray(offset, offset + BLOCK);
    if (header.every((byte) => byte === 0)) break; // end-of-archive block
    const magic = readString(header, 257, 6);
    if (!magic.startsWith("ustar")) {
      throw new TarError(`not a ustar header at offset ${offset}`);
    }
    verifyChecksum(header);
    const size = readOctal(header, 124, 12);
    const typeflag = readString(header, 156, 1) || "0";
    const prefix = readString(header, 345, 155);
    const name = (prefix ? prefix + "/" : "") + readString(header, 0, 100);
    offset += BLOCK;
    if (offset + size > data.length) {
      throw new TarError(`truncated archive: ${name} claims ${size} bytes`);
    }
    if (typeflag === "0" || typeflag === "\0") {
      entries.push({ name, data: Buffer.from(data.subarray(offset, offset + size)) });
    }
    offset += Math.ceil(size / BLOCK) * BLOCK;
  }
  if (entries.length === 0) {
    throw new TarError("archive contains no file entries");
  }
  return entries;
}
