"""Main-content extraction from HTML.

The page is cut into segments at block-level tag boundaries. A segment
qualifies as content when it is outside page chrome (nav, header, footer,
aside, forms), is not dominated by link text, and has a text-to-markup
ratio of at least one half. The main content is the contiguous run of
qualifying segments with the most text. When no segment qualifies, the
whole-body text is used instead.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from urllib.parse import urljoin, urldefrag

BLOCK_TAGS = {
    "address", "article", "aside", "blockquote", "body", "dd", "div", "dl", "dt", "figcaption",
    "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "header", "li", "main",
    "nav", "ol", "p", "pre", "section", "table", "td", "th", "tr", "ul", "br", "hr",
}
CHROME_TAGS = {"nav", "header", "footer", "aside", "form"}
SKIP_TAGS = {"script", "style", "noscript", "template", "svg"}
VOID_TAGS = {"br", "hr", "img", "meta", "link", "input", "area", "base", "col", "embed", "source", "wbr"}
HEADINGS = {"h1", "h2", "h3", "h4", "h5", "h6"}

MIN_DENSITY = 0.5
MAX_LINK_RATIO = 0.5

_WS = re.compile(r"\s+")


def collapse(text: str) -> str:
    return _WS.sub(" ", text).strip()


@dataclass
class Segment:
    parts: list[str] = field(default_factory=list)
    link_chars: int = 0
    markup_chars: int = 0
    chrome: bool = False
    heading: bool = False

    @property
    def text(self) -> str:
        return collapse("".join(self.parts))

    def qualifies(self) -> bool:
        n = len(self.text)
        if n == 0 or self.chrome:
            return False
        if self.heading:
            return True
        if self.link_chars / n >= MAX_LINK_RATIO:
            return False
        return n / (n + self.markup_chars) >= MIN_DENSITY


class _PageParser(HTMLParser):
    def __init__(self, base_url: str):
        super().__init__(convert_charrefs=True)
        self.base_url = base_url
        self.segments: list[Segment] = [Segment()]
        self.stack: list[str] = []
        self.skip = 0
        self.in_link = 0
        self.link_href: str | None = None
        self.link_title = ""
        self.link_text: list[str] = []
        self.link_chrome = False
        self.links: list[tuple[str, str, bool]] = []
        self.title_parts: list[str] = []
        self.in_title = False
        self.has_body = False
        self.body_parts: list[str] = []
        self.in_body = False

    def _chrome(self) -> bool:
        return any(t in CHROME_TAGS for t in self.stack)

    def _new_segment(self) -> Segment:
        seg = Segment(chrome=self._chrome(), heading=any(t in HEADINGS for t in self.stack))
        self.segments.append(seg)
        return seg

    def handle_starttag(self, tag, attrs):
        raw = self.get_starttag_text() or f"<{tag}>"
        if tag in SKIP_TAGS:
            self.skip += 1
            return
        if tag == "title":
            self.in_title = True
        if tag == "body":
            self.has_body = True
            self.in_body = True
        if tag not in VOID_TAGS:
            self.stack.append(tag)
        if tag in BLOCK_TAGS:
            self._new_segment()
        self.segments[-1].markup_chars += len(raw)
        if tag == "a":
            d = dict(attrs)
            self.in_link += 1
            self.link_href = d.get("href")
            self.link_title = d.get("title") or ""
            self.link_text = []
            self.link_chrome = self._chrome()

    def handle_endtag(self, tag):
        if tag in SKIP_TAGS:
            self.skip = max(0, self.skip - 1)
            return
        if tag == "title":
            self.in_title = False
        if tag == "body":
            self.in_body = False
        if tag == "a" and self.in_link:
            self.in_link -= 1
            if self.link_href is not None:
                self.links.append((self.link_href, collapse("".join(self.link_text)) or self.link_title,
                                   self.link_chrome))
            self.link_href = None
        self.segments[-1].markup_chars += len(tag) + 3
        if tag in self.stack:
            while self.stack and self.stack.pop() != tag:
                pass
        if tag in BLOCK_TAGS:
            self._new_segment()

    def handle_data(self, data):
        if self.skip:
            return
        if self.in_title:
            self.title_parts.append(data)
            return
        if self.in_body or not self.has_body:
            self.body_parts.append(data)
        seg = self.segments[-1]
        seg.parts.append(data)
        if self.in_link:
            seg.link_chars += len(collapse(data))
            self.link_text.append(data)


@dataclass
class Extraction:
    title: str
    main_content: str
    sections: list[tuple[str, str]]
    sublinks: list[tuple[str, str]]
    used_fallback: bool
    has_body: bool


def extract(html: str, base_url: str = "") -> Extraction:
    p = _PageParser(base_url)
    p.feed(html)
    p.close()
    segs = [s for s in p.segments if s.text]

    best: tuple[int, int, int] = (0, 0, 0)  # (chars, start, stop)
    start = None
    chars = 0
    for i, seg in enumerate(segs + [Segment(parts=["x"], chrome=True)]):
        if seg.qualifies():
            if start is None:
                start, chars = i, 0
            chars += len(seg.text)
        elif start is not None:
            if chars > best[0]:
                best = (chars, start, i)
            start = None
    run = segs[best[1]:best[2]]

    sections: list[tuple[str, str]] = []
    if run:
        heading, body = "", []
        for seg in run:
            if seg.heading:
                if body or heading:
                    sections.append((heading, "\n".join(body)))
                heading, body = seg.text, []
            else:
                body.append(seg.text)
        if body or heading:
            sections.append((heading, "\n".join(body)))
        main = "\n\n".join(seg.text for seg in run)
        used_fallback = False
    else:
        main = collapse("".join(p.body_parts))
        sections = [("", main)] if main else []
        used_fallback = True

    title = collapse("".join(p.title_parts))
    if not title:
        heads = [s.text for s in segs if s.heading]
        title = heads[0] if heads else ""

    sublinks: list[tuple[str, str]] = []
    seen = set()
    self_url = urldefrag(base_url)[0]
    for href, desc, chrome in p.links:
        href = href.strip()
        if chrome or not href or href.startswith(("#", "javascript:", "mailto:", "tel:")):
            continue
        url = urldefrag(urljoin(base_url, href))[0]
        if url in seen or url == self_url:
            continue
        seen.add(url)
        sublinks.append((url, desc[:100]))
    return Extraction(title, main, sections, sublinks, used_fallback, p.has_body)
