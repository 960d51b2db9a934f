/*
 * Call-stack hashing shared with the analysis toolchain.
 *
 * A site id is the 64-bit FNV-1a hash of the stack's frame strings, with a
 * newline folded in after every frame so frame boundaries matter.  The hash
 * must produce bit-identical ids to the Python tooling that parses the
 * traces this shim writes; the test-suite pins cross-language vectors.
 */

const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;
const U64 = (1n << 64n) - 1n;
const FRAME_SEPARATOR = 0x0an;

const encoder = new TextEncoder();

export function siteHash(frames: readonly string[]): bigint {
  let h = FNV_OFFSET;
  for (const frame of frames) {
    for (const byte of encoder.encode(frame)) {
      h = ((h ^ BigInt(byte)) * FNV_PRIME) & U64;
    }
    h = ((h ^ FRAME_SEPARATOR) * FNV_PRIME) & U64;
  }
  return h;
}

export function siteHex(id: bigint): string {
  return id.toString(16).padStart(16, "0");
}
