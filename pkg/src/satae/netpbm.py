"""Binary PGM (P5) and PPM (P6) images, 8-bit only."""
import numpy as np


def encode(img: np.ndarray) -> bytes:
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise ValueError("only 8-bit images are supported")
    if img.ndim == 2:
        tag = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        tag = b"P6"
    else:
        raise ValueError(f"cannot encode image of shape {img.shape}")
    h, w = img.shape[:2]
    return tag + f"\n{w} {h}\n255\n".encode() + np.ascontiguousarray(img).tobytes()


def write(path, img: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode(img))


def _tokens(buf: bytes, count: int, pos: int):
    out = []
    while len(out) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated netpbm header")
        out.append(buf[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return out, pos + 1


def decode(buf: bytes) -> np.ndarray:
    (tag, w, h, maxval), pos = _tokens(buf, 4, 0)
    if tag not in (b"P5", b"P6"):
        raise ValueError(f"unsupported netpbm type {tag!r}")
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise ValueError("only maxval 255 is supported")
    ch = 1 if tag == b"P5" else 3
    n = w * h * ch
    if len(buf) - pos < n:
        raise ValueError("truncated netpbm raster")
    img = np.frombuffer(buf, dtype=np.uint8, count=n, offset=pos)
    return img.reshape(h, w) if ch == 1 else img.reshape(h, w, 3)


def read(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode(fh.read())
