"""Rule parsing and evaluation against small documents."""

import pytest

from imcrawler.dom import parse_dom
from imcrawler.errors import MultiplicityViolation, RuleSyntaxError
from imcrawler.rules import (
    apply_rule,
    default_rules,
    parse_rule_line,
    parse_rules,
    select_nodes,
)

DOC = parse_dom(
    '<div class="outer">'
    '  <ul class="menu">'
    '    <li class="item"><a href="/a">A</a></li>'
    '    <li class="item"><a href="/b">B</a></li>'
    '    <li class="item"><a>no href</a></li>'
    "  </ul>"
    '  <div class="attr" data-attr="city"><span>Delhi</span></div>'
    "</div>"
)


def rule(text):
    return parse_rule_line(text)


def test_parse_rule_line_shapes():
    r = rule("menu.links | ul[class=menu] > a | many | attr:href")
    assert r.name == "menu.links"
    assert [s.tag for s in r.steps] == ["ul", "a"]
    assert r.steps[0].attrs == (("class", "menu"),)
    assert r.multiplicity == "many"
    assert r.capture == ("attr", "href")

    r = rule("x | [data-attr=city]:2 | one | text")
    assert r.steps[0].tag is None
    assert r.steps[0].index == 2
    assert r.capture == ("text", None)


def test_parse_rule_line_rejections():
    bad = [
        "too | few | fields",
        "a | b | c | d | e",
        " | div | one | text",
        "n | div | some | text",
        "n | div | one | attr:",
        "n | div | one | href",
        "n | | one | text",
        "n | div[class] | one | text",
        "n | div:0 | one | text",
        "n | 0div | one | text",
    ]
    for line in bad:
        with pytest.raises(RuleSyntaxError):
            parse_rule_line(line)


def test_parse_rules_file_semantics():
    rs = parse_rules("# comment\n\na | div | one | text\nb | p | many | text\n")
    assert rs.names() == ["a", "b"]
    assert "a" in rs and "missing" not in rs
    with pytest.raises(RuleSyntaxError):
        parse_rules("a | div | one | text\na | p | one | text\n")


def test_many_matches_in_document_order():
    hrefs = apply_rule(DOC, rule("x | li[class=item] > a | many | attr:href"))
    assert hrefs == ["/a", "/b"]  # the third <a> has no href and is skipped
    texts = apply_rule(DOC, rule("x | li | many | text"))
    assert texts == ["A", "B", "no href"]


def test_positional_index_is_one_based():
    assert apply_rule(DOC, rule("x | li:1 > a | many | text")) == ["A"]
    assert apply_rule(DOC, rule("x | li:3 | one | text")) == ["no href"]
    # an index past the match count selects nothing rather than wrapping
    assert apply_rule(DOC, rule("x | li:4 | one | text")) == []


def test_one_rule_with_two_matches_is_an_error():
    with pytest.raises(MultiplicityViolation):
        select_nodes(DOC, rule("x | li > a | one | attr:href"))
    # zero matches is a normal outcome, not an error
    assert apply_rule(DOC, rule("x | table | one | text")) == []


def test_rules_scope_to_the_given_subtree():
    r = rule("x | a | many | text")
    assert apply_rule(DOC, r) == ["A", "B", "no href"]
    first_li = select_nodes(DOC, rule("x | li:1 | one | text"))[0]
    assert apply_rule(first_li, r) == ["A"]


def test_attribute_predicates_must_all_hold():
    r = rule("x | div[class=attr][data-attr=city] | one | text")
    assert apply_rule(DOC, r) == ["Delhi"]
    r = rule("x | div[class=attr][data-attr=town] | one | text")
    assert apply_rule(DOC, r) == []


def test_default_rules_cover_every_extractor_lookup():
    from imcrawler.extract import POST_FIELDS, SECTION_NAMES

    rs = default_rules()
    wanted = [f"section.{n}" for n in SECTION_NAMES]
    wanted += [f"post.{n}" for n in POST_FIELDS]
    wanted += ["friend.link", "page.next", "post.item"]
    missing = [name for name in wanted if name not in rs]
    assert missing == []
