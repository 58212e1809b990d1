// Minimal PNG codec over node:zlib. Decodes 8-bit non-interlaced
// grayscale / gray+alpha / RGB / RGBA (everything the Python client's
// Pillow emits for its test images); encodes 8-bit grayscale.

import * as zlib from 'node:zlib';

export interface Raster {
  width: number;
  height: number;
  channels: number; // 1 gray, 2 gray+alpha, 3 rgb, 4 rgba
  pixels: Uint8Array; // row-major, channel-interleaved
}

export interface GrayImage {
  width: number;
  height: number;
  pixels: Uint8Array; // row-major
}

export class PngError extends Error {}

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

const CHANNELS_BY_COLOR_TYPE: Record<number, number> = { 0: 1, 2: 3, 4: 2, 6: 4 };

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

export function crc32(data: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < data.length; i++) {
    c = CRC_TABLE[(c ^ data[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function paeth(left: number, up: number, upLeft: number): number {
  const p = left + up - upLeft;
  const pa = Math.abs(p - left);
  const pb = Math.abs(p - up);
  const pc = Math.abs(p - upLeft);
  if (pa <= pb && pa <= pc) return left;
  return pb <= pc ? up : upLeft;
}

export function decodePng(data: Uint8Array): Raster {
  const buf = Buffer.from(data.buffer, data.byteOffset, data.byteLength);
  if (buf.length < 8 || !buf.subarray(0, 8).equals(SIGNATURE)) {
    throw new PngError('not a PNG: bad signature');
  }
  let width = 0;
  let height = 0;
  let channels = 0;
  let sawHeader = false;
  const idat: Buffer[] = [];
  let off = 8;
  while (off + 8 <= buf.length) {
    const length = buf.readUInt32BE(off);
    const type = buf.toString('latin1', off + 4, off + 8);
    const body = buf.subarray(off + 8, off + 8 + length);
    if (body.length < length || off + 12 + length > buf.length) {
      throw new PngError(`truncated ${type} chunk`);
    }
    const stored = buf.readUInt32BE(off + 8 + length);
    if (stored !== crc32(buf.subarray(off + 4, off + 8 + length))) {
      throw new PngError(`crc mismatch in ${type} chunk`);
    }
    if (type === 'IHDR') {
      width = body.readUInt32BE(0);
      height = body.readUInt32BE(4);
      const bitDepth = body[8];
      const colorType = body[9];
      const interlace = body[12];
      if (bitDepth !== 8) throw new PngError(`unsupported bit depth ${bitDepth}`);
      if (!(colorType in CHANNELS_BY_COLOR_TYPE)) {
        throw new PngError(`unsupported color type ${colorType}`);
      }
      if (interlace !== 0) throw new PngError('interlaced PNG not supported');
      channels = CHANNELS_BY_COLOR_TYPE[colorType];
      sawHeader = true;
    } else if (type === 'IDAT') {
      idat.push(body);
    } else if (type === 'IEND') {
      break;
    }
    off += 12 + length;
  }
  if (!sawHeader || idat.length === 0) throw new PngError('missing IHDR or IDAT');
  if (width === 0 || height === 0) throw new PngError('empty image');

  let raw: Buffer;
  try {
    raw = zlib.inflateSync(Buffer.concat(idat));
  } catch (err) {
    throw new PngError(`bad IDAT stream: ${(err as Error).message}`);
  }
  const stride = width * channels;
  if (raw.length !== (stride + 1) * height) {
    throw new PngError(`scanline data is ${raw.length} bytes, expected ${(stride + 1) * height}`);
  }

  const out = new Uint8Array(stride * height);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    const rowIn = y * (stride + 1) + 1;
    const rowOut = y * stride;
    for (let x = 0; x < stride; x++) {
      const cur = raw[rowIn + x];
      const left = x >= channels ? out[rowOut + x - channels] : 0;
      const up = y > 0 ? out[rowOut - stride + x] : 0;
      const upLeft = y > 0 && x >= channels ? out[rowOut - stride + x - channels] : 0;
      let v: number;
      switch (filter) {
        case 0:
          v = cur;
          break;
        case 1:
          v = cur + left;
          break;
        case 2:
          v = cur + up;
          break;
        case 3:
          v = cur + ((left + up) >> 1);
          break;
        case 4:
          v = cur + paeth(left, up, upLeft);
          break;
        default:
          throw new PngError(`unknown filter type ${filter} in row ${y}`);
      }
      out[rowOut + x] = v & 0xff;
    }
  }
  return { width, height, channels, pixels: out };
}

function pngChunk(type: string, body: Uint8Array): Buffer {
  const head = Buffer.alloc(8);
  head.writeUInt32BE(body.length, 0);
  head.write(type, 4, 'latin1');
  const typed = Buffer.concat([head.subarray(4), Buffer.from(body)]);
  const tail = Buffer.alloc(4);
  tail.writeUInt32BE(crc32(typed), 0);
  return Buffer.concat([head, Buffer.from(body), tail]);
}

export function encodePngGray(img: GrayImage): Buffer {
  const { width, height, pixels } = img;
  if (width <= 0 || height <= 0) throw new PngError('empty image');
  if (pixels.length !== width * height) {
    throw new PngError(`pixel buffer is ${pixels.length} bytes, expected ${width * height}`);
  }
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 0; // grayscale
  const raw = Buffer.alloc((width + 1) * height);
  for (let y = 0; y < height; y++) {
    raw[y * (width + 1)] = 0; // filter: none
    raw.set(pixels.subarray(y * width, (y + 1) * width), y * (width + 1) + 1);
  }
  return Buffer.concat([
    SIGNATURE,
    pngChunk('IHDR', ihdr),
    pngChunk('IDAT', zlib.deflateSync(raw)),
    pngChunk('IEND', new Uint8Array(0)),
  ]);
}

export function toGray(r: Raster): GrayImage {
  const n = r.width * r.height;
  if (r.channels === 1) {
    return { width: r.width, height: r.height, pixels: r.pixels.slice() };
  }
  const out = new Uint8Array(n);
  if (r.channels === 2) {
    for (let i = 0; i < n; i++) out[i] = r.pixels[i * 2];
    return { width: r.width, height: r.height, pixels: out };
  }
  for (let i = 0; i < n; i++) {
    const base = i * r.channels;
    const lum = 0.299 * r.pixels[base] + 0.587 * r.pixels[base + 1] + 0.114 * r.pixels[base + 2];
    out[i] = Math.min(255, Math.round(lum));
  }
  return { width: r.width, height: r.height, pixels: out };
}
