"""HTML parsing into a navigable element tree.

``parse_dom`` is total: any byte or character string yields a tree, never
an exception. Recovery mirrors what browsers do with the tag soup this
crawler actually meets:

* unclosed elements are closed implicitly (``<div><p>a<p>b</div>`` yields
  two sibling ``p`` elements under the ``div``),
* void elements (``br``, ``img``, ...) never stay open,
* stray end tags with no matching open element are dropped,
* end-of-input closes everything still open.
"""

from __future__ import annotations

from html.parser import HTMLParser
from typing import Iterator

VOID_ELEMENTS = frozenset(
    "area base br col embed hr img input link meta param source track wbr".split()
)

# Starting tag T implicitly closes an open element whose tag is in _CLOSE_BEFORE[T].
# Applied repeatedly against the top of the open-element stack.
_HEADINGS = {"h1", "h2", "h3", "h4", "h5", "h6"}
_P_CLOSERS = {
    "p", "div", "section", "article", "aside", "nav", "header", "footer",
    "ul", "ol", "li", "table", "pre", "blockquote", "form", "main",
} | _HEADINGS
_CLOSE_BEFORE: dict[str, frozenset[str]] = {}
for _t in _P_CLOSERS:
    _CLOSE_BEFORE[_t] = frozenset({"p"})
_CLOSE_BEFORE["li"] = frozenset({"p", "li"})
_CLOSE_BEFORE["option"] = frozenset({"option"})
_CLOSE_BEFORE["tr"] = frozenset({"tr", "td", "th"})
_CLOSE_BEFORE["td"] = frozenset({"td", "th"})
_CLOSE_BEFORE["th"] = frozenset({"td", "th"})
_CLOSE_BEFORE["dd"] = frozenset({"dd", "dt", "p"})
_CLOSE_BEFORE["dt"] = frozenset({"dd", "dt", "p"})


class DomNode:
    """One element. Children are DomNode instances or plain strings (text)."""

    __slots__ = ("tag", "attrs", "children", "parent")

    def __init__(self, tag: str, attrs: dict[str, str] | None = None,
                 parent: "DomNode | None" = None) -> None:
        self.tag = tag
        self.attrs: dict[str, str] = attrs or {}
        self.children: list[DomNode | str] = []
        self.parent = parent

    def __repr__(self) -> str:
        attrs = "".join(f" {k}={v!r}" for k, v in self.attrs.items())
        return f"<DomNode {self.tag}{attrs} children={len(self.children)}>"

    def iter_descendants(self) -> Iterator["DomNode"]:
        """All element descendants in document (preorder) order, self excluded."""
        for child in self.children:
            if isinstance(child, DomNode):
                yield child
                yield from child.iter_descendants()

    def text(self, sep: str = "\n") -> str:
        """Stripped text of every descendant text node, joined by ``sep``.

        Whitespace-only text nodes (template indentation) are dropped.
        """
        parts: list[str] = []
        self._collect_text(parts)
        return sep.join(parts)

    def _collect_text(self, parts: list[str]) -> None:
        for child in self.children:
            if isinstance(child, str):
                stripped = child.strip()
                if stripped:
                    parts.append(stripped)
            else:
                child._collect_text(parts)


class DomTree:
    """Parse result; ``root`` is a synthetic ``#document`` element."""

    def __init__(self, root: DomNode) -> None:
        self.root = root

    def iter_elements(self) -> Iterator[DomNode]:
        return self.root.iter_descendants()


class _TreeBuilder(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.root = DomNode("#document")
        self.stack: list[DomNode] = [self.root]

    # -- recovery helpers --

    def _implied_closes(self, tag: str) -> None:
        closers = _CLOSE_BEFORE.get(tag)
        if not closers:
            return
        while len(self.stack) > 1 and self.stack[-1].tag in closers:
            self.stack.pop()

    def _open(self, tag: str, attrs: list[tuple[str, str | None]], push: bool) -> None:
        self._implied_closes(tag)
        attr_map: dict[str, str] = {}
        for name, value in attrs:
            if name not in attr_map:  # first occurrence wins, like browsers
                attr_map[name] = value if value is not None else ""
        node = DomNode(tag, attr_map, parent=self.stack[-1])
        self.stack[-1].children.append(node)
        if push and tag not in VOID_ELEMENTS:
            self.stack.append(node)

    # -- HTMLParser callbacks --

    def handle_starttag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        self._open(tag, attrs, push=True)

    def handle_startendtag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        self._open(tag, attrs, push=False)

    def handle_endtag(self, tag: str) -> None:
        if tag in VOID_ELEMENTS:
            return
        # close up to the matching open element; ignore the tag entirely
        # if nothing on the stack matches
        for i in range(len(self.stack) - 1, 0, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                return

    def handle_data(self, data: str) -> None:
        if data:
            self.stack[-1].children.append(data)

    # comments, doctypes and processing instructions carry nothing we extract
    def handle_comment(self, data: str) -> None:
        pass

    def handle_decl(self, decl: str) -> None:
        pass

    def handle_pi(self, data: str) -> None:
        pass

    def unknown_decl(self, data: str) -> None:
        pass


def parse_dom(markup: bytes | str) -> DomTree:
    """Parse markup into a DomTree. Never raises, whatever the input."""
    if isinstance(markup, bytes):
        markup = markup.decode("utf-8", errors="replace")
    builder = _TreeBuilder()
    try:
        builder.feed(markup)
        builder.close()
    except Exception:  # noqa: BLE001 -- totality beats fidelity on hostile input
        pass
    return DomTree(builder.root)
