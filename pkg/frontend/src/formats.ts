/**
 * Decoders and encoders for the artifact files the CLI produces: the
 * event binary, binary PGM/PPM images, and the raw tensor container.
 * All formats are little-endian; every codec round-trips bit-exactly.
 */

export class FormatError extends Error {}

const EVENT_MAGIC = "EVST";
const EVENT_VERSION = 1;
const EVENT_HEADER_SIZE = 18; // magic(4) + version(2) + width(2) + height(2) + count(8)
const EVENT_RECORD_SIZE = 13; // t(8) + x(2) + y(2) + p(1)

export interface EventArrays {
  width: number;
  height: number;
  t: BigUint64Array;
  x: Uint16Array;
  y: Uint16Array;
  p: Int8Array;
}

function magicOf(buf: Buffer): string {
  return buf.subarray(0, 4).toString("latin1");
}

export function decodeEvents(buf: Buffer): EventArrays {
  if (buf.length < EVENT_HEADER_SIZE) {
    throw new FormatError("truncated file (no full header)");
  }
  if (magicOf(buf) !== EVENT_MAGIC) {
    throw new FormatError(`bad magic ${JSON.stringify(magicOf(buf))}`);
  }
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  const version = view.getUint16(4, true);
  if (version !== EVENT_VERSION) {
    throw new FormatError(`unsupported version ${version}`);
  }
  const width = view.getUint16(6, true);
  const height = view.getUint16(8, true);
  const count = Number(view.getBigUint64(10, true));
  const expected = count * EVENT_RECORD_SIZE;
  const bodyLen = buf.length - EVENT_HEADER_SIZE;
  if (bodyLen < expected) {
    throw new FormatError(`truncated file (${bodyLen} of ${expected} record bytes)`);
  }
  if (bodyLen > expected) {
    throw new FormatError(`count mismatch (trailing bytes beyond declared ${count} records)`);
  }
  const t = new BigUint64Array(count);
  const x = new Uint16Array(count);
  const y = new Uint16Array(count);
  const p = new Int8Array(count);
  for (let i = 0; i < count; i++) {
    const off = EVENT_HEADER_SIZE + i * EVENT_RECORD_SIZE;
    t[i] = view.getBigUint64(off, true);
    x[i] = view.getUint16(off + 8, true);
    y[i] = view.getUint16(off + 10, true);
    p[i] = view.getInt8(off + 12);
  }
  return { width, height, t, x, y, p };
}

export function encodeEvents(events: EventArrays): Buffer {
  const count = events.t.length;
  const buf = Buffer.alloc(EVENT_HEADER_SIZE + count * EVENT_RECORD_SIZE);
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  buf.write(EVENT_MAGIC, 0, "latin1");
  view.setUint16(4, EVENT_VERSION, true);
  view.setUint16(6, events.width, true);
  view.setUint16(8, events.height, true);
  view.setBigUint64(10, BigInt(count), true);
  for (let i = 0; i < count; i++) {
    const off = EVENT_HEADER_SIZE + i * EVENT_RECORD_SIZE;
    view.setBigUint64(off, events.t[i], true);
    view.setUint16(off + 8, events.x[i], true);
    view.setUint16(off + 10, events.y[i], true);
    view.setInt8(off + 12, events.p[i]);
  }
  return buf;
}

export interface PnmImage {
  width: number;
  height: number;
  /** Raw pixel bytes as stored in the file: row-major, interleaved for PPM. */
  pixels: Uint8Array;
}

function parsePnmHeader(
  buf: Buffer,
  expectedMagic: string
): { width: number; height: number; offset: number } {
  if (buf.subarray(0, 2).toString("latin1") !== expectedMagic) {
    throw new FormatError(
      `bad magic ${JSON.stringify(buf.subarray(0, 2).toString("latin1"))}, expected ${expectedMagic}`
    );
  }
  const fields: number[] = [];
  let i = 2;
  while (fields.length < 3) {
    if (i >= buf.length) throw new FormatError("truncated header");
    const ch = buf[i];
    if (ch === 0x23) {
      // '#': skip to end of line
      while (i < buf.length && buf[i] !== 0x0a) i++;
      i++;
      continue;
    }
    if (ch === 0x20 || ch === 0x09 || ch === 0x0a || ch === 0x0d) {
      i++;
      continue;
    }
    let token = "";
    while (i < buf.length) {
      const c = buf[i];
      if (c === 0x20 || c === 0x09 || c === 0x0a || c === 0x0d) {
        i++;
        break;
      }
      if (c === 0x23) {
        while (i < buf.length && buf[i] !== 0x0a) i++;
        i++;
        break;
      }
      token += String.fromCharCode(c);
      i++;
    }
    fields.push(parseInt(token, 10));
  }
  const [width, height, maxval] = fields;
  if (maxval !== 255) {
    throw new FormatError(`unsupported depth (maxval ${maxval}, only 255 supported)`);
  }
  return { width, height, offset: i };
}

export function decodePgm(buf: Buffer): PnmImage {
  const { width, height, offset } = parsePnmHeader(buf, "P5");
  const n = width * height;
  if (buf.length - offset !== n) throw new FormatError("truncated pixel data");
  return { width, height, pixels: new Uint8Array(buf.subarray(offset, offset + n)) };
}

export function encodePgm(image: PnmImage): Buffer {
  const header = Buffer.from(`P5\n${image.width} ${image.height}\n255\n`, "ascii");
  return Buffer.concat([header, Buffer.from(image.pixels)]);
}

export function decodePpm(buf: Buffer): PnmImage {
  const { width, height, offset } = parsePnmHeader(buf, "P6");
  const n = width * height * 3;
  if (buf.length - offset !== n) throw new FormatError("truncated pixel data");
  return { width, height, pixels: new Uint8Array(buf.subarray(offset, offset + n)) };
}

export function encodePpm(image: PnmImage): Buffer {
  const header = Buffer.from(`P6\n${image.width} ${image.height}\n255\n`, "ascii");
  return Buffer.concat([header, Buffer.from(image.pixels)]);
}

const TENSOR_MAGIC = "EVTN";
const TENSOR_VERSION = 1;

export interface Tensor {
  shape: number[];
  dtype: "float32" | "float64";
  data: Float32Array | Float64Array;
}

export function decodeTensor(buf: Buffer): Tensor {
  if (magicOf(buf) !== TENSOR_MAGIC) {
    throw new FormatError(`bad magic ${JSON.stringify(magicOf(buf))}`);
  }
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  const version = view.getUint16(4, true);
  if (version !== TENSOR_VERSION) throw new FormatError(`unsupported version ${version}`);
  const tag = view.getUint8(6);
  const ndim = view.getUint8(7);
  const shape: number[] = [];
  for (let d = 0; d < ndim; d++) shape.push(view.getUint32(8 + 4 * d, true));
  const count = shape.reduce((a, b) => a * b, 1);
  const offset = 8 + 4 * ndim;
  if (tag !== 1 && tag !== 2) throw new FormatError(`unknown dtype tag ${tag}`);
  const itemSize = tag === 1 ? 4 : 8;
  if (buf.length - offset !== count * itemSize) throw new FormatError("truncated tensor data");
  // copy into an aligned buffer; the file body is not 4/8-byte aligned
  const body = buf.subarray(offset);
  const aligned = new Uint8Array(body.length);
  aligned.set(body);
  if (tag === 1) {
    return { shape, dtype: "float32", data: new Float32Array(aligned.buffer) };
  }
  return { shape, dtype: "float64", data: new Float64Array(aligned.buffer) };
}
