from typing import Iterable, Optional, Sequence

from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.markup import escape

console = Console()
err_console = Console(stderr=True)


def escape_rich_markup(text):
    """Escape special characters in text to prevent Rich markup interpretation"""
    if text is None:
        return ""

    # Convert to string if not already
    if not isinstance(text, str):
        text = str(text)

    # Use Rich's built-in escape function
    return escape(text)


def error_message(error_type: str, detail: str, error_code: Optional[str] = None, notes: Sequence[str] = ()):
    """
    Prints a formatted error panel for domain and usage errors.

    Args:
        error_type: The type of error (e.g., "Scenario Error", "Planning Error")
        detail: Detailed error message
        error_code: Optional symbolic error code
        notes: Extra lines (diagnostics) shown under the detail
    """
    table = Table(show_header=False, expand=True, box=None)
    table.width = 60

    if error_code:
        table.add_row("[bold]Error Code:[/bold]", f"[red]{escape_rich_markup(error_code)}[/red]")
        table.add_row("")

    table.add_row("[bold]Error Details:[/bold]")
    table.add_row(f"[red]{escape_rich_markup(detail)}[/red]")
    for note in notes:
        table.add_row(f"[yellow]{escape_rich_markup(note)}[/yellow]")

    panel = Panel(
        table,
        title=f"[bold red]Loopflow - {escape_rich_markup(error_type)}[/bold red]",
        border_style="red",
        expand=True,
        width=80,
    )

    err_console.print(panel)


def print_table(title: str, columns: Sequence[str], rows: Iterable[Sequence[object]]):
    """Render rows as a rich table on stdout."""
    table = Table(title=escape_rich_markup(title), header_style="bold cyan")
    for column in columns:
        table.add_column(escape_rich_markup(column))
    for row in rows:
        table.add_row(*(escape_rich_markup(_fmt(cell)) for cell in row))
    console.print(table)


def _fmt(cell: object) -> str:
    if isinstance(cell, float):
        return f"{cell:.4g}"
    return str(cell)
