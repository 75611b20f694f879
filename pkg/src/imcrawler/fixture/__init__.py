"""Synthetic social-network fixture: deterministic generation, HTML page
rendering, an HTTP server with login sessions, and a ground-truth oracle."""

from .network import (  # noqa: F401
    EMOTION_KINDS,
    MASKABLE_FIELDS,
    METRO_CITIES,
    POST_TYPES,
    FixtureNetwork,
    FixturePost,
    FixtureProfile,
    choose_fault_profiles,
    expected_secret,
    generate_network,
    ground_truth,
    make_posts,
    write_ground_truth,
)
from .pages import HtmlPage, format_count, render_profile_pages  # noqa: F401
from .server import FixtureService, serve  # noqa: F401
