from procscore.mining.dataset import CSV_HEADER, export_dataset, import_dataset, read_rows
from procscore.mining.diff import DiffStats, compute_density, decode_text, diff_net_stats, line_diff
from procscore.mining.lines import CommentSyntax, LanguageProfile, LineClass, classify_line, classify_lines
from procscore.mining.records import DEFAULT_KEYWORDS, CommitRecord, count_keywords
from procscore.mining.repo import mine_repository

__all__ = [
    "CSV_HEADER", "CommentSyntax", "CommitRecord", "DEFAULT_KEYWORDS", "DiffStats", "LanguageProfile",
    "LineClass", "classify_line", "classify_lines", "compute_density", "count_keywords", "decode_text",
    "diff_net_stats", "export_dataset", "import_dataset", "line_diff", "mine_repository", "read_rows",
]
