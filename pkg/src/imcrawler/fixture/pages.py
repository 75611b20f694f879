"""HTML rendering for fixture profiles.

Every profile renders from one fixed template with stable element
identifiers (see docs/fixture_schema.md): an About page, friend-list pages
and timeline pages chained through ``<a id="next-page">`` links. Fields
whose disclosure mask is off are omitted entirely, never blanked; a
section with nothing to show is dropped from the page.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from html import escape

from .network import EMOTION_KINDS, FixtureNetwork, FixturePost


def format_count(n: int) -> str:
    """Render a count, abbreviated only when exactly representable.

    1200 -> "1.2K", 57000 -> "57K", 3_400_000 -> "3.4M"; anything that one
    decimal cannot represent exactly stays plain digits, so parsing an
    abbreviated count always recovers the original value.
    """
    if n >= 1_000_000 and n % 100_000 == 0:
        value, suffix = n / 1_000_000, "M"
    elif 1_000 <= n < 1_000_000 and n % 100 == 0:
        value, suffix = n / 1_000, "K"
    else:
        return str(n)
    text = f"{value:.1f}"
    if text.endswith(".0"):
        text = text[:-2]
    return text + suffix


@dataclass(frozen=True)
class HtmlPage:
    kind: str  # "about" | "friends" | "timeline"
    page_no: int
    path: str
    html: str


def _attr_block(name: str, value: str) -> str:
    return (
        f'<div class="attr" data-attr="{escape(name)}">'
        f'<span class="attr-name">{escape(name)}</span>'
        f'<span class="attr-value">{escape(value)}</span></div>'
    )


def _page_shell(title: str, profile_id: str, body: str) -> str:
    pid = escape(profile_id)
    return (
        "<!DOCTYPE html>\n"
        f"<html><head><meta charset=\"utf-8\"><title>{escape(title)}</title></head>\n"
        f"<body>\n<div id=\"profile-root\" data-profile-id=\"{pid}\">\n"
        f"<h1 id=\"profile-name\">{pid}</h1>\n"
        f"<nav id=\"profile-nav\">"
        f"<a href=\"/profile/{pid}/about\">about</a> "
        f"<a href=\"/profile/{pid}/friends\">friends</a> "
        f"<a href=\"/profile/{pid}/timeline\">timeline</a></nav>\n"
        f"{body}\n</div>\n</body></html>\n"
    )


def page_count(item_count: int, page_size: int) -> int:
    """Pages needed for item_count items; an empty listing still has page 1."""
    return max(1, math.ceil(item_count / page_size))


def render_about(network: FixtureNetwork, profile_id: str) -> str:
    prof = network.profile(profile_id)
    sections: list[str] = []

    basic = [
        _attr_block(f, getattr(prof, f))
        for f in ("gender", "birthday", "email", "phone")
        if prof.discloses(f)
    ]
    if basic:
        sections.append('<section id="basic-information">' + "".join(basic) + "</section>")

    places = [
        _attr_block(f, getattr(prof, f))
        for f in ("hometown", "current_city")
        if prof.discloses(f)
    ]
    if places:
        sections.append('<section id="places-lived">' + "".join(places) + "</section>")

    family_bits = []
    if prof.discloses("relationship_status"):
        family_bits.append(_attr_block("relationship_status", prof.relationship_status))
    if prof.family_members:
        items = "".join(
            f'<li class="family-member">{escape(m)}</li>' for m in prof.family_members
        )
        family_bits.append(
            '<div class="attr" data-attr="family_members">'
            '<span class="attr-name">family_members</span>'
            f'<ul class="family-members">{items}</ul></div>'
        )
    if family_bits:
        sections.append(
            '<section id="family-and-relationship">' + "".join(family_bits) + "</section>"
        )

    if prof.pages_liked:
        items = "".join(f'<li class="liked-page">{escape(p)}</li>' for p in prof.pages_liked)
        sections.append(f'<section id="pages-liked"><ul class="liked-pages">{items}</ul></section>')
    if prof.groups_joined:
        items = "".join(f'<li class="joined-group">{escape(g)}</li>' for g in prof.groups_joined)
        sections.append(f'<section id="groups-joined"><ul class="joined-groups">{items}</ul></section>')

    # friend summary stays last so page truncation faults knock it out
    friend_count = len(network.friends(profile_id))
    sections.append(
        '<section id="friend-summary">'
        f'<span id="friend-count">{format_count(friend_count)}</span></section>'
    )
    return _page_shell(f"{profile_id} - about", profile_id, "\n".join(sections))


def _next_link(base_path: str, page_no: int, total_pages: int) -> str:
    if page_no >= total_pages:
        return ""
    return f'<a id="next-page" href="{base_path}?page={page_no + 1}">next</a>'


def render_friends_page(network: FixtureNetwork, profile_id: str,
                        page_no: int, page_size: int) -> str:
    friends = network.friends(profile_id)
    total = page_count(len(friends), page_size)
    if not 1 <= page_no <= total:
        raise IndexError(f"friends page {page_no} of {total}")
    chunk = friends[(page_no - 1) * page_size: page_no * page_size]
    items = "".join(
        f'<li class="friend"><a class="friend-link" href="/profile/{escape(f)}">{escape(f)}</a></li>'
        for f in chunk
    )
    body = (
        f'<div id="friend-list" data-page="{page_no}" data-total="{len(friends)}">'
        f"<ul>{items}</ul></div>\n"
        + _next_link(f"/profile/{profile_id}/friends", page_no, total)
    )
    return _page_shell(f"{profile_id} - friends p{page_no}", profile_id, body)


def _render_post(post: FixturePost) -> str:
    emotion_items = "".join(
        f'<span class="emotion" data-kind="{kind}">'
        f'<span class="emotion-kind">{kind}</span>'
        f'<span class="emotion-count">{format_count(post.emotion_counts[kind])}</span></span>'
        for kind in EMOTION_KINDS
    )
    views = ""
    if post.view_count is not None:
        views = f'<span class="post-views">{format_count(post.view_count)}</span>'
    tags = ""
    if post.tags:
        tag_items = "".join(f'<li class="post-tag">{escape(t)}</li>' for t in post.tags)
        tags = f'<ul class="post-tags">{tag_items}</ul>'
    return (
        f'<article class="post" data-index="{post.post_index}">'
        f'<h2 class="post-title">{escape(post.title)}</h2>'
        f'<div class="post-content" data-type="{post.post_type}">{escape(post.content)}</div>'
        f'<div class="post-meta">'
        f'<span class="post-date">{post.date}</span>'
        f'<span class="post-time">{post.time}</span>'
        f'<span class="post-comments">{format_count(post.comment_count)}</span>'
        f'<span class="post-shares">{format_count(post.share_count)}</span>'
        f"{views}"
        f'<span class="post-reactions">{format_count(post.reaction_total)}</span>'
        f"</div>"
        f'<div class="post-emotions">{emotion_items}</div>'
        f"{tags}"
        f"</article>"
    )


def render_timeline_page(network: FixtureNetwork, profile_id: str,
                         page_no: int, page_size: int) -> str:
    posts = network.profile(profile_id).posts  # already newest first
    total = page_count(len(posts), page_size)
    if not 1 <= page_no <= total:
        raise IndexError(f"timeline page {page_no} of {total}")
    chunk = posts[(page_no - 1) * page_size: page_no * page_size]
    body = (
        f'<div id="timeline" data-page="{page_no}" data-total="{len(posts)}">'
        + "".join(_render_post(p) for p in chunk)
        + "</div>\n"
        + _next_link(f"/profile/{profile_id}/timeline", page_no, total)
    )
    return _page_shell(f"{profile_id} - timeline p{page_no}", profile_id, body)


def render_profile_pages(network: FixtureNetwork, profile_id: str,
                         page_size: int) -> list[HtmlPage]:
    """All pages for one profile: About, friend pages, timeline pages."""
    prof = network.profile(profile_id)
    pages = [HtmlPage("about", 1, f"/profile/{profile_id}/about",
                      render_about(network, profile_id))]
    for k in range(1, page_count(len(network.friends(profile_id)), page_size) + 1):
        pages.append(HtmlPage(
            "friends", k, f"/profile/{profile_id}/friends?page={k}",
            render_friends_page(network, profile_id, k, page_size),
        ))
    for k in range(1, page_count(len(prof.posts), page_size) + 1):
        pages.append(HtmlPage(
            "timeline", k, f"/profile/{profile_id}/timeline?page={k}",
            render_timeline_page(network, profile_id, k, page_size),
        ))
    return pages


LOGIN_WALL = (
    "<!DOCTYPE html>\n<html><head><title>login required</title></head>\n"
    "<body><div id=\"login-wall\"><h1>Please log in</h1>"
    "<p>This content is only visible to logged-in members.</p>"
    "</div></body></html>\n"
)
