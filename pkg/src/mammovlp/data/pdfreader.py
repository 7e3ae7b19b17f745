"""Minimal PDF reader producing page layouts for figure/caption mining.

No PDF library is available in this environment, so this module parses
the subset of PDF needed for atlas-style documents directly: object
scanning, Flate/ASCII85/DCT stream filters, image XObject placement via
the graphics state, and positioned text runs from content streams. It is
not a general PDF implementation; exotic features (encryption, predictor
filters, CID fonts) raise or are skipped. Documents produced by common
report generators parse cleanly.

All layout coordinates are top-left origin with y growing downward.
"""

from __future__ import annotations

import base64
import logging
import re
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from ..errors import ExtractionError

logger = logging.getLogger(__name__)

_WHITESPACE = b"\x00\t\n\x0c\r "
_DELIMITERS = b"()<>[]{}/%"
_NUMBER_RE = re.compile(rb"[+-]?(\d+\.?\d*|\.\d+)")
_OBJ_RE = re.compile(rb"(\d+)\s+(\d+)\s+obj\b")


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, top-left origin."""

    top: float
    left: float
    bottom: float
    right: float

    @property
    def width(self) -> float:
        return self.right - self.left

    @property
    def height(self) -> float:
        return self.bottom - self.top

    @property
    def center(self) -> tuple[float, float]:
        return ((self.top + self.bottom) / 2.0, (self.left + self.right) / 2.0)

    def union(self, other: "Box") -> "Box":
        return Box(
            top=min(self.top, other.top),
            left=min(self.left, other.left),
            bottom=max(self.bottom, other.bottom),
            right=max(self.right, other.right),
        )


@dataclass
class TextBlock:
    text: str
    box: Box


@dataclass
class PageImage:
    pixels: np.ndarray  # (H, W) uint8 grayscale
    box: Box
    name: str


@dataclass
class PageLayout:
    number: int  # 1-based
    width: float
    height: float
    text_blocks: list[TextBlock] = field(default_factory=list)
    figures: list[PageImage] = field(default_factory=list)


class _Ref:
    __slots__ = ("num",)

    def __init__(self, num: int):
        self.num = num

    def __repr__(self):
        return f"Ref({self.num})"


class _Name(str):
    """PDF name token; distinct from literal strings."""


class _Parser:
    """Recursive-descent parser over raw PDF bytes."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def skip_ws(self) -> None:
        data, n = self.data, len(self.data)
        while self.pos < n:
            ch = self.data[self.pos]
            if ch in _WHITESPACE:
                self.pos += 1
            elif ch == 0x25:  # '%' comment to end of line
                while self.pos < n and data[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                return

    def peek(self, k: int = 1) -> bytes:
        return self.data[self.pos:self.pos + k]

    def parse_value(self):
        self.skip_ws()
        head = self.peek(2)
        if head[:1] == b"<" and head == b"<<":
            return self.parse_dict()
        if head[:1] == b"<":
            return self.parse_hex_string()
        if head[:1] == b"[":
            return self.parse_array()
        if head[:1] == b"/":
            return self.parse_name()
        if head[:1] == b"(":
            return self.parse_literal_string()
        if self.data.startswith(b"true", self.pos):
            self.pos += 4
            return True
        if self.data.startswith(b"false", self.pos):
            self.pos += 5
            return False
        if self.data.startswith(b"null", self.pos):
            self.pos += 4
            return None
        return self.parse_number_or_ref()

    def parse_dict(self) -> dict:
        self.pos += 2
        result: dict = {}
        while True:
            self.skip_ws()
            if self.peek(2) == b">>":
                self.pos += 2
                return result
            if self.peek(1) != b"/":
                raise ExtractionError(f"malformed dictionary near byte {self.pos}")
            key = self.parse_name()
            result[str(key)] = self.parse_value()

    def parse_array(self) -> list:
        self.pos += 1
        items = []
        while True:
            self.skip_ws()
            if self.peek(1) == b"]":
                self.pos += 1
                return items
            items.append(self.parse_value())

    def parse_name(self) -> _Name:
        self.pos += 1
        start = self.pos
        data, n = self.data, len(self.data)
        while self.pos < n and data[self.pos] not in _WHITESPACE and data[self.pos] not in _DELIMITERS:
            self.pos += 1
        raw = data[start:self.pos]
        # #xx hex escapes inside names
        if b"#" in raw:
            raw = re.sub(rb"#([0-9A-Fa-f]{2})", lambda m: bytes([int(m.group(1), 16)]), raw)
        return _Name(raw.decode("latin-1"))

    def parse_literal_string(self) -> bytes:
        self.pos += 1
        out = bytearray()
        depth = 1
        data, n = self.data, len(self.data)
        while self.pos < n:
            ch = data[self.pos]
            if ch == 0x5C:  # backslash
                self.pos += 1
                if self.pos >= n:
                    break
                esc = data[self.pos]
                mapping = {0x6E: 10, 0x72: 13, 0x74: 9, 0x62: 8, 0x66: 12}
                if esc in mapping:
                    out.append(mapping[esc])
                    self.pos += 1
                elif 0x30 <= esc <= 0x37:  # octal, up to 3 digits
                    digits = bytearray()
                    while self.pos < n and len(digits) < 3 and 0x30 <= data[self.pos] <= 0x37:
                        digits.append(data[self.pos])
                        self.pos += 1
                    out.append(int(digits, 8) & 0xFF)
                elif esc in b"\r\n":  # line continuation
                    self.pos += 1
                    if esc == 0x0D and self.pos < n and data[self.pos] == 0x0A:
                        self.pos += 1
                else:
                    out.append(esc)
                    self.pos += 1
            elif ch == 0x28:
                depth += 1
                out.append(ch)
                self.pos += 1
            elif ch == 0x29:
                depth -= 1
                self.pos += 1
                if depth == 0:
                    return bytes(out)
                out.append(ch)
            else:
                out.append(ch)
                self.pos += 1
        raise ExtractionError("unterminated literal string")

    def parse_hex_string(self) -> bytes:
        self.pos += 1
        end = self.data.find(b">", self.pos)
        if end < 0:
            raise ExtractionError("unterminated hex string")
        digits = re.sub(rb"\s", b"", self.data[self.pos:end])
        self.pos = end + 1
        if len(digits) % 2:
            digits += b"0"
        return bytes.fromhex(digits.decode("ascii"))

    def parse_number_or_ref(self):
        m = _NUMBER_RE.match(self.data, self.pos)
        if not m:
            raise ExtractionError(f"cannot parse value near byte {self.pos}")
        self.pos = m.end()
        text = m.group(0)
        if b"." not in text:
            # look ahead for "gen R" marking an indirect reference
            save = self.pos
            self.skip_ws()
            m2 = re.match(rb"(\d+)\s+R(?![a-zA-Z0-9])", self.data[self.pos:self.pos + 32])
            if m2:
                self.pos += m2.end()
                return _Ref(int(text))
            self.pos = save
            return int(text)
        return float(text)


def _apply_filters(data: bytes, filters, parms) -> bytes:
    if filters is None:
        return data
    if not isinstance(filters, list):
        filters = [filters]
    if not isinstance(parms, list):
        parms = [parms] * len(filters)
    for flt, parm in zip(filters, parms):
        name = str(flt)
        if name == "FlateDecode":
            data = zlib.decompress(data)
            if isinstance(parm, dict) and parm.get("Predictor", 1) != 1:
                raise ExtractionError("predictor-filtered streams are not supported")
        elif name == "ASCII85Decode":
            body = data.strip()
            if body.endswith(b"~>"):
                body = body[:-2]
            if body.startswith(b"<~"):
                body = body[2:]
            data = base64.a85decode(re.sub(rb"\s", b"", body))
        elif name == "ASCIIHexDecode":
            digits = re.sub(rb"[\s>]", b"", data)
            if len(digits) % 2:
                digits += b"0"
            data = bytes.fromhex(digits.decode("ascii"))
        elif name == "DCTDecode":
            return data  # JPEG bytes; decoded by the image stage
        else:
            raise ExtractionError(f"unsupported stream filter {name}")
    return data


_IDENTITY = (1.0, 0.0, 0.0, 1.0, 0.0, 0.0)


def _compose(m, n):
    """Row-vector convention: apply m, then n."""
    ma, mb, mc, md, me, mf = m
    na, nb, nc, nd, ne, nf = n
    return (
        ma * na + mb * nc,
        ma * nb + mb * nd,
        mc * na + md * nc,
        mc * nb + md * nd,
        me * na + mf * nc + ne,
        me * nb + mf * nd + nf,
    )


def _apply(m, x, y):
    a, b, c, d, e, f = m
    return (a * x + c * y + e, b * x + d * y + f)


@dataclass
class _TextRun:
    text: str
    x: float
    y: float  # baseline, PDF coords (origin bottom-left)
    size: float


class PdfDocument:
    """Parsed object map plus page-walk helpers."""

    def __init__(self, data: bytes):
        if not data.startswith(b"%PDF"):
            raise ExtractionError("not a PDF document (missing %PDF header)")
        self.data = data
        self.objects: dict[int, tuple[dict | object, bytes | None]] = {}
        self._scan_objects()
        if self._trailer_value("Encrypt") is not None:
            raise ExtractionError("encrypted documents are not supported")

    @classmethod
    def open(cls, path: str | Path) -> "PdfDocument":
        try:
            raw = Path(path).read_bytes()
        except OSError as exc:
            raise ExtractionError(f"cannot read {path}: {exc}") from exc
        return cls(raw)

    def _scan_objects(self) -> None:
        for m in _OBJ_RE.finditer(self.data):
            num = int(m.group(1))
            parser = _Parser(self.data, m.end())
            try:
                value = parser.parse_value()
            except ExtractionError:
                continue
            stream = None
            parser.skip_ws()
            if self.data.startswith(b"stream", parser.pos):
                start = parser.pos + len(b"stream")
                if self.data.startswith(b"\r\n", start):
                    start += 2
                elif self.data.startswith(b"\n", start):
                    start += 1
                length = value.get("Length") if isinstance(value, dict) else None
                if isinstance(length, _Ref):
                    length = self.resolve(length)
                if isinstance(length, int):
                    end = start + length
                    if not re.match(rb"\s*endstream", self.data[end:end + 16]):
                        end = self.data.find(b"endstream", start)
                else:
                    end = self.data.find(b"endstream", start)
                if end < 0:
                    continue
                stream = self.data[start:end]
            self.objects[num] = (value, stream)
        if not self.objects:
            raise ExtractionError("no objects found; file is not parseable as PDF")

    def resolve(self, value):
        seen = set()
        while isinstance(value, _Ref):
            if value.num in seen:
                raise ExtractionError("circular object reference")
            seen.add(value.num)
            entry = self.objects.get(value.num)
            if entry is None:
                return None
            value = entry[0]
        return value

    def stream_for(self, ref) -> bytes:
        num = ref.num if isinstance(ref, _Ref) else int(ref)
        entry = self.objects.get(num)
        if entry is None or entry[1] is None:
            raise ExtractionError(f"object {num} has no stream")
        info, raw = entry
        body = raw.rstrip(b"\r\n")
        return _apply_filters(body, info.get("Filter"), info.get("DecodeParms"))

    def _trailer_value(self, key: str):
        for m in re.finditer(rb"trailer", self.data):
            parser = _Parser(self.data, m.end())
            try:
                trailer = parser.parse_value()
            except ExtractionError:
                continue
            if isinstance(trailer, dict) and key in trailer:
                return trailer[key]
        return None

    def page_objects(self) -> list[tuple[int, dict]]:
        """Page dicts in document order (catalog walk, object-number fallback)."""
        root = self.resolve(self._trailer_value("Root"))
        ordered: list[tuple[int, dict]] = []
        if isinstance(root, dict):
            pages = root.get("Pages")
            stack = [pages] if pages is not None else []
            while stack:
                node_ref = stack.pop(0)
                node = self.resolve(node_ref)
                if not isinstance(node, dict):
                    continue
                if str(node.get("Type")) == "Page":
                    num = node_ref.num if isinstance(node_ref, _Ref) else -1
                    ordered.append((num, node))
                else:
                    kids = self.resolve(node.get("Kids")) or []
                    stack = list(kids) + stack
        if not ordered:
            for num in sorted(self.objects):
                value = self.objects[num][0]
                if isinstance(value, dict) and str(value.get("Type")) == "Page":
                    ordered.append((num, value))
        if not ordered:
            raise ExtractionError("document contains no pages")
        return ordered

    def _inherited(self, page: dict, key: str):
        node = page
        for _ in range(32):
            if key in node:
                return node[key]
            parent = self.resolve(node.get("Parent"))
            if not isinstance(parent, dict):
                return None
            node = parent
        return None

    def _decode_image(self, info: dict, raw: bytes, name: str) -> np.ndarray | None:
        filters = info.get("Filter")
        filter_names = [str(f) for f in (filters if isinstance(filters, list) else [filters]) if f]
        body = _apply_filters(raw.rstrip(b"\r\n"), info.get("Filter"), info.get("DecodeParms"))
        if "DCTDecode" in filter_names:
            decoded = cv2.imdecode(np.frombuffer(body, dtype=np.uint8), cv2.IMREAD_GRAYSCALE)
            if decoded is None:
                logger.warning("failed to decode JPEG image %s", name)
                return None
            return decoded
        width = self.resolve(info.get("Width"))
        height = self.resolve(info.get("Height"))
        bits = self.resolve(info.get("BitsPerComponent")) or 8
        space = str(self.resolve(info.get("ColorSpace")) or "DeviceGray")
        if bits != 8:
            logger.warning("skipping image %s with %s bits per component", name, bits)
            return None
        channels = {"DeviceGray": 1, "DeviceRGB": 3}.get(space)
        if channels is None:
            logger.warning("skipping image %s with color space %s", name, space)
            return None
        expected = width * height * channels
        if len(body) < expected:
            logger.warning("image %s has truncated pixel data", name)
            return None
        arr = np.frombuffer(body[:expected], dtype=np.uint8).reshape(height, width, channels)
        if channels == 3:
            arr = cv2.cvtColor(arr, cv2.COLOR_RGB2GRAY)
        else:
            arr = arr[:, :, 0]
        return arr

    def _walk_content(self, content: bytes, resources: dict, ctm,
                      page_height: float, figures: list[PageImage],
                      runs: list[_TextRun], depth: int = 0) -> None:
        if depth > 8:
            return
        xobjects = self.resolve(resources.get("XObject")) if resources else None
        xobjects = xobjects if isinstance(xobjects, dict) else {}
        parser = _Parser(content)
        operands: list = []
        stack: list = []
        text_matrix = line_matrix = _IDENTITY
        font_size = 12.0
        leading = 0.0
        n = len(content)

        def emit_text(raw: bytes):
            nonlocal text_matrix
            try:
                text = raw.decode("latin-1")
            except Exception:
                return
            trm = _compose(text_matrix, ctm)
            x, y = _apply(trm, 0.0, 0.0)
            scale = (trm[0] ** 2 + trm[1] ** 2) ** 0.5
            runs.append(_TextRun(text=text, x=x, y=y, size=font_size * scale))
            advance = 0.5 * font_size * len(text)
            text_matrix = _compose((1, 0, 0, 1, advance, 0), text_matrix)

        while parser.pos < n:
            parser.skip_ws()
            if parser.pos >= n:
                break
            ch = content[parser.pos]
            if ch in b"/([<" or ch in b"+-." or 0x30 <= ch <= 0x39:
                try:
                    operands.append(parser.parse_value())
                except ExtractionError:
                    parser.pos += 1
                continue
            start = parser.pos
            while parser.pos < n and content[parser.pos] not in _WHITESPACE \
                    and content[parser.pos] not in _DELIMITERS:
                parser.pos += 1
            if parser.pos == start:
                parser.pos += 1
                continue
            op = content[start:parser.pos]

            if op == b"q":
                stack.append(ctm)
            elif op == b"Q":
                ctm = stack.pop() if stack else ctm
            elif op == b"cm" and len(operands) >= 6:
                ctm = _compose(tuple(float(v) for v in operands[-6:]), ctm)
            elif op == b"BT":
                text_matrix = line_matrix = _IDENTITY
            elif op == b"Tf" and len(operands) >= 2:
                font_size = float(operands[-1])
            elif op == b"TL" and operands:
                leading = float(operands[-1])
            elif op == b"Tm" and len(operands) >= 6:
                text_matrix = line_matrix = tuple(float(v) for v in operands[-6:])
            elif op in (b"Td", b"TD") and len(operands) >= 2:
                tx, ty = float(operands[-2]), float(operands[-1])
                if op == b"TD":
                    leading = -ty
                line_matrix = _compose((1, 0, 0, 1, tx, ty), line_matrix)
                text_matrix = line_matrix
            elif op == b"T*":
                line_matrix = _compose((1, 0, 0, 1, 0.0, -leading), line_matrix)
                text_matrix = line_matrix
            elif op == b"Tj" and operands and isinstance(operands[-1], bytes):
                emit_text(operands[-1])
            elif op == b"'" and operands and isinstance(operands[-1], bytes):
                line_matrix = _compose((1, 0, 0, 1, 0.0, -leading), line_matrix)
                text_matrix = line_matrix
                emit_text(operands[-1])
            elif op == b'"' and operands and isinstance(operands[-1], bytes):
                line_matrix = _compose((1, 0, 0, 1, 0.0, -leading), line_matrix)
                text_matrix = line_matrix
                emit_text(operands[-1])
            elif op == b"TJ" and operands and isinstance(operands[-1], list):
                pieces = b"".join(x for x in operands[-1] if isinstance(x, bytes))
                if pieces:
                    emit_text(pieces)
            elif op == b"Do" and operands and isinstance(operands[-1], _Name):
                name = str(operands[-1])
                ref = xobjects.get(name)
                info = self.resolve(ref)
                if isinstance(info, dict):
                    subtype = str(info.get("Subtype"))
                    if subtype == "Image":
                        pixels = None
                        try:
                            entry = self.objects.get(ref.num if isinstance(ref, _Ref) else -1)
                            if entry and entry[1] is not None:
                                pixels = self._decode_image(info, entry[1], name)
                        except ExtractionError as exc:
                            logger.warning("image %s not decodable: %s", name, exc)
                        if pixels is not None:
                            corners = [_apply(ctm, x, y) for x in (0.0, 1.0) for y in (0.0, 1.0)]
                            xs = [p[0] for p in corners]
                            ys = [p[1] for p in corners]
                            box = Box(
                                top=page_height - max(ys),
                                left=min(xs),
                                bottom=page_height - min(ys),
                                right=max(xs),
                            )
                            figures.append(PageImage(pixels=pixels, box=box, name=name))
                    elif subtype == "Form":
                        try:
                            inner = self.stream_for(ref)
                        except ExtractionError:
                            inner = None
                        if inner is not None:
                            inner_res = self.resolve(info.get("Resources")) or resources
                            inner_ctm = ctm
                            matrix = self.resolve(info.get("Matrix"))
                            if isinstance(matrix, list) and len(matrix) == 6:
                                inner_ctm = _compose(tuple(float(v) for v in matrix), ctm)
                            self._walk_content(inner, inner_res, inner_ctm, page_height,
                                               figures, runs, depth + 1)
            operands = []

    def page_layouts(self) -> list[PageLayout]:
        layouts = []
        for index, (_, page) in enumerate(self.page_objects(), start=1):
            media = self.resolve(self._inherited(page, "MediaBox")) or [0, 0, 612, 792]
            media = [float(self.resolve(v)) for v in media]
            page_w = media[2] - media[0]
            page_h = media[3] - media[1]
            contents = self.resolve(page.get("Contents"))
            chunks: list[bytes] = []
            refs = contents if isinstance(contents, list) else [page.get("Contents")]
            for ref in refs:
                if ref is None:
                    continue
                try:
                    chunks.append(self.stream_for(ref))
                except ExtractionError as exc:
                    logger.warning("page %d content stream unreadable: %s", index, exc)
            resources = self.resolve(self._inherited(page, "Resources")) or {}
            figures: list[PageImage] = []
            runs: list[_TextRun] = []
            self._walk_content(b"\n".join(chunks), resources, _IDENTITY, page_h, figures, runs)
            layouts.append(PageLayout(
                number=index,
                width=page_w,
                height=page_h,
                text_blocks=_group_runs(runs, page_h),
                figures=figures,
            ))
        return layouts


def _group_runs(runs: list[_TextRun], page_height: float) -> list[TextBlock]:
    """Merge baseline runs into blocks: lines stacked within ~1.8x the font
    height and roughly left-aligned belong together (caption paragraphs)."""
    if not runs:
        return []
    lines = []
    for run in runs:
        if not run.text.strip():
            continue
        top = page_height - run.y - run.size
        box = Box(top=top, left=run.x, bottom=page_height - run.y + 0.25 * run.size,
                  right=run.x + 0.5 * run.size * len(run.text))
        lines.append((box, run.text.strip(), run.size))
    lines.sort(key=lambda item: (item[0].top, item[0].left))
    blocks: list[TextBlock] = []
    current_box: Box | None = None
    current_text: list[str] = []
    last_size = 12.0
    for box, text, size in lines:
        if current_box is not None \
                and box.top - current_box.bottom < 0.8 * max(size, last_size) \
                and abs(box.left - current_box.left) < 4.0 * size:
            current_box = current_box.union(box)
            current_text.append(text)
        else:
            if current_box is not None:
                blocks.append(TextBlock(text=" ".join(current_text), box=current_box))
            current_box = box
            current_text = [text]
        last_size = size
    blocks.append(TextBlock(text=" ".join(current_text), box=current_box))
    return blocks


def read_page_layouts(path: str | Path) -> list[PageLayout]:
    """Open a document and return one layout per page."""
    return PdfDocument.open(path).page_layouts()
