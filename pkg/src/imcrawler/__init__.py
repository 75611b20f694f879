"""imcrawler: a BFS profile crawler with DOM-rule extraction, parallel
agents, and an offline synthetic social-network fixture for verification."""

__version__ = "0.1.0"
