import logging
from rich.console import Console
from rich.highlighter import RegexHighlighter
from rich.logging import RichHandler
from rich.theme import Theme

from loopflow.config import LOG_LEVEL

custom_theme = Theme(
    {
        "logging.level.debug": "dim cyan",
        "logging.level.info": "bold white",
        "logging.level.warning": "bold yellow",
        "logging.level.error": "bold red",
        "loop.tag": "bold magenta",
        "loop.fault": "bold red",
        "loop.agent": "cyan",
        "loop.number": "green",
    }
)
# Log output goes to stderr so plan and metrics JSON can stream on stdout.
console = Console(theme=custom_theme, stderr=True)


class LoopHighlighter(RegexHighlighter):
    """Colours the bracketed event tags and agent indices in loop messages."""

    base_style = "loop."
    highlights = [
        r"(?P<tag>\[(REPLAN|REUSE|GOAL|SEARCH|REFINE|ASYNC)\])",
        r"(?P<fault>\[(MISS|COLLISION)\])",
        r"(?P<agent>\bagents? \d+(?: and \d+)?)",
        r"(?P<number>(?<![\w.])-?\d+\.\d+(?:ms|s)?\b)",
    ]


def get_logger(name: str = "loopflow", level: int = LOG_LEVEL) -> logging.Logger:
    logger = logging.getLogger(name)
    logger.setLevel(level)

    if not logger.handlers:
        handler = RichHandler(
            console=console,
            markup=False,
            highlighter=LoopHighlighter(),
            rich_tracebacks=True,
            show_path=False,
            show_time=False,
            show_level=False,
        )
        handler.setFormatter(logging.Formatter("%(name)s - %(message)s"))
        logger.addHandler(handler)
        logger.propagate = False

    return logger
