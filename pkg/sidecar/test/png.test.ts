import { describe, expect, test } from 'vitest';
import * as zlib from 'node:zlib';
import { crc32, decodePng, encodePngGray, toGray, GrayImage } from '../src/png.js';

// 13x7 grayscale PNG written by Pillow, pixels recorded alongside
const GRAY_B64 =
  'iVBORw0KGgoAAAANSUhEUgAAAA0AAAAHCAAAAAD2G5jGAAAAbUlEQVR4nAFiAJ3/ABUKEQQZJwAhDB4KMAsBNQj7DNgfCOUFEfQHGAFLGgHpFPIa/9gnDesPBDz98Cv49hHsIjXgPN8CDgVC+Q0iKhxa+xIqRAQLHRrxOM4pHPEwF/EsAM3Q/O7+6fj/6fv///+oRScYx5gXbQAAAABJRU5ErkJggg==';
const GRAY_PIX = [
  21, 10, 17, 4, 25, 39, 0, 33, 12, 30, 10, 48, 11, 53, 61, 56, 68, 28, 59, 67, 40, 45, 62,
  50, 57, 81, 75, 101, 102, 79, 99, 85, 111, 110, 70, 109, 122, 101, 116, 135, 132, 116, 145,
  137, 127, 144, 124, 104, 162, 130, 161, 128, 149, 137, 182, 138, 150, 161, 186, 152, 194,
  157, 148, 203, 196, 160, 178, 208, 167, 223, 173, 227, 214, 199, 205, 228, 213, 247, 205,
  208, 252, 238, 254, 233, 248, 255, 233, 251, 255, 255, 255,
];

// 5x4 RGB PNG written by Pillow, with its BT.601 luma
const RGB_B64 =
  'iVBORw0KGgoAAAANSUhEUgAAAAUAAAAECAIAAADJUWIXAAAAS0lEQVR4nAFAAL//AKYlRTRNV+pb7dNCxmKs+wF1lpJH5v0D+zW4HuHz9cgAUjBBVboXkzZNQO5lk+QDApnnmjoYORoak0/dogNndOfaHYcUBeKBAAAAAElFTkSuQmCC';
const RGB_PIX = [
  166, 37, 69, 52, 77, 87, 234, 91, 237, 211, 66, 198, 98, 172, 251, 117, 150, 146, 188, 124,
  143, 191, 119, 196, 119, 149, 165, 106, 138, 109, 82, 48, 65, 85, 186, 23, 147, 54, 77, 64,
  238, 101, 147, 228, 3, 235, 23, 219, 143, 210, 80, 173, 80, 224, 143, 203, 7, 150, 75, 119,
];
const RGB_LUMA = [
  79, 71, 150, 124, 159, 140, 145, 149, 142, 125, 60, 137, 84, 170, 178, 109, 175, 124, 163,
  102,
];

function gray(width: number, height: number, fill: (i: number) => number): GrayImage {
  const pixels = new Uint8Array(width * height);
  for (let i = 0; i < pixels.length; i++) pixels[i] = fill(i) & 0xff;
  return { width, height, pixels };
}

describe('decode', () => {
  test('reads a Pillow grayscale PNG exactly', () => {
    const raster = decodePng(Buffer.from(GRAY_B64, 'base64'));
    expect(raster.width).toBe(13);
    expect(raster.height).toBe(7);
    expect(raster.channels).toBe(1);
    expect(Array.from(raster.pixels)).toEqual(GRAY_PIX);
  });

  test('reads a Pillow RGB PNG and converts to luma', () => {
    const raster = decodePng(Buffer.from(RGB_B64, 'base64'));
    expect(raster.channels).toBe(3);
    expect(Array.from(raster.pixels)).toEqual(RGB_PIX);
    const g = toGray(raster);
    expect(g.width).toBe(5);
    expect(g.height).toBe(4);
    expect(Array.from(g.pixels)).toEqual(RGB_LUMA);
  });

  test('rejects a bad signature', () => {
    const data = Buffer.from(GRAY_B64, 'base64');
    data[0] ^= 0xff;
    expect(() => decodePng(data)).toThrow(/signature/);
  });

  test('rejects a corrupted chunk crc', () => {
    const data = Buffer.from(GRAY_B64, 'base64');
    data[data.length - 20] ^= 0x01; // inside IDAT body
    expect(() => decodePng(data)).toThrow(/crc mismatch/);
  });

  test('rejects truncated data', () => {
    const data = Buffer.from(GRAY_B64, 'base64');
    expect(() => decodePng(data.subarray(0, 40))).toThrow();
  });
});

describe('encode', () => {
  test('round trips through decode', () => {
    const img = gray(13, 7, (i) => GRAY_PIX[i]);
    const raster = decodePng(encodePngGray(img));
    expect(raster.width).toBe(13);
    expect(raster.height).toBe(7);
    expect(raster.channels).toBe(1);
    expect(Array.from(raster.pixels)).toEqual(GRAY_PIX);
  });

  test('handles degenerate sizes', () => {
    for (const [w, h] of [
      [1, 1],
      [1, 7],
      [7, 1],
    ]) {
      const img = gray(w, h, (i) => 37 * i + 5);
      const back = decodePng(encodePngGray(img));
      expect(back.width).toBe(w);
      expect(back.height).toBe(h);
      expect(Array.from(back.pixels)).toEqual(Array.from(img.pixels));
    }
  });

  test('rejects a mismatched pixel buffer', () => {
    expect(() => encodePngGray({ width: 4, height: 4, pixels: new Uint8Array(15) })).toThrow(
      /expected 16/,
    );
  });
});

describe('filters', () => {
  // forward-filter a reference image by hand, one filter type per row,
  // and check the decoder undoes all five
  test('decoder undoes every filter type', () => {
    const width = 6;
    const height = 5;
    const ref = gray(width, height, (i) => (i * 53 + 11) % 251);
    const paeth = (a: number, b: number, c: number) => {
      const p = a + b - c;
      const pa = Math.abs(p - a);
      const pb = Math.abs(p - b);
      const pc = Math.abs(p - c);
      if (pa <= pb && pa <= pc) return a;
      return pb <= pc ? b : c;
    };
    const raw = Buffer.alloc((width + 1) * height);
    for (let y = 0; y < height; y++) {
      const ftype = y % 5;
      raw[y * (width + 1)] = ftype;
      for (let x = 0; x < width; x++) {
        const cur = ref.pixels[y * width + x];
        const left = x > 0 ? ref.pixels[y * width + x - 1] : 0;
        const up = y > 0 ? ref.pixels[(y - 1) * width + x] : 0;
        const upLeft = x > 0 && y > 0 ? ref.pixels[(y - 1) * width + x - 1] : 0;
        let v: number;
        if (ftype === 0) v = cur;
        else if (ftype === 1) v = cur - left;
        else if (ftype === 2) v = cur - up;
        else if (ftype === 3) v = cur - ((left + up) >> 1);
        else v = cur - paeth(left, up, upLeft);
        raw[y * (width + 1) + 1 + x] = v & 0xff;
      }
    }
    const chunk = (type: string, body: Uint8Array): Buffer => {
      const head = Buffer.alloc(8);
      head.writeUInt32BE(body.length, 0);
      head.write(type, 4, 'latin1');
      const tail = Buffer.alloc(4);
      tail.writeUInt32BE(crc32(Buffer.concat([head.subarray(4), Buffer.from(body)])), 0);
      return Buffer.concat([head, Buffer.from(body), tail]);
    };
    const ihdr = Buffer.alloc(13);
    ihdr.writeUInt32BE(width, 0);
    ihdr.writeUInt32BE(height, 4);
    ihdr[8] = 8;
    const png = Buffer.concat([
      Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
      chunk('IHDR', ihdr),
      chunk('IDAT', zlib.deflateSync(raw)),
      chunk('IEND', new Uint8Array(0)),
    ]);
    const back = decodePng(png);
    expect(Array.from(back.pixels)).toEqual(Array.from(ref.pixels));
  });
});
