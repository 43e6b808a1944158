"""CSV ingestion for daily bars and macro series.

Strict on structure: malformed rows fail with the offending line number,
duplicate (date, ticker) keys are integrity errors, and macro series are
forward-filled onto the bar calendar.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .schema import BARS_COLUMNS, MACRO_COLUMNS


class ParseError(ValueError):
    """Malformed CSV content; message carries the 1-based line number."""


class IntegrityError(ValueError):
    """Structurally valid file violating a dataset invariant."""


@dataclass
class BarRecord:
    date: str
    ticker: str
    close: float
    volume: float
    gsector: int
    gsubind: int
    shares_outstanding: float
    book_value: float


@dataclass
class MacroRecord:
    date: str
    oil: float
    treasury_10y: float
    dollar_index: float
    vix: float
    risk_free: float
    factor_mkt: float
    factor_smb: float
    factor_hml: float
    factor_umd: float
    spy_return: float


def _read_rows(path, expected_header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if [h.strip() for h in header] != expected_header:
            raise ParseError(f"{path}: line 1: header {header} does not match "
                             f"expected {expected_header}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected_header):
                raise ParseError(f"{path}: line {line_no}: expected "
                                 f"{len(expected_header)} fields, got {len(row)}")
            yield line_no, row


def read_bars(path):
    """Parse a bars CSV into BarRecords sorted by (date, ticker)."""
    records = []
    seen = set()
    for line_no, row in _read_rows(path, BARS_COLUMNS):
        try:
            rec = BarRecord(date=row[0], ticker=row[1], close=float(row[2]),
                            volume=float(row[3]), gsector=int(row[4]),
                            gsubind=int(row[5]), shares_outstanding=float(row[6]),
                            book_value=float(row[7]))
        except ValueError as exc:
            raise ParseError(f"{path}: line {line_no}: {exc}") from None
        if rec.close <= 0:
            raise ParseError(f"{path}: line {line_no}: close must be positive, got {rec.close}")
        if rec.volume < 0:
            raise ParseError(f"{path}: line {line_no}: volume must be >= 0, got {rec.volume}")
        key = (rec.date, rec.ticker)
        if key in seen:
            raise IntegrityError(f"{path}: duplicate (date, ticker) record {key}")
        seen.add(key)
        records.append(rec)
    records.sort(key=lambda r: (r.date, r.ticker))
    return records


def read_macro(path):
    """Parse a macro CSV into MacroRecords sorted by date."""
    records = []
    seen = set()
    for line_no, row in _read_rows(path, MACRO_COLUMNS):
        try:
            rec = MacroRecord(date=row[0], oil=float(row[1]), treasury_10y=float(row[2]),
                              dollar_index=float(row[3]), vix=float(row[4]),
                              risk_free=float(row[5]), factor_mkt=float(row[6]),
                              factor_smb=float(row[7]), factor_hml=float(row[8]),
                              factor_umd=float(row[9]), spy_return=float(row[10]))
        except ValueError as exc:
            raise ParseError(f"{path}: line {line_no}: {exc}") from None
        if rec.date in seen:
            raise IntegrityError(f"{path}: duplicate macro date {rec.date}")
        seen.add(rec.date)
        records.append(rec)
    records.sort(key=lambda r: r.date)
    return records


def forward_fill_macro(macro, calendar):
    """One MacroRecord per calendar date, carrying the last known values forward.

    Calendar dates before the first macro record raise: there is nothing to
    fill from.
    """
    by_date = {m.date: m for m in macro}
    filled = []
    last = None
    for date in calendar:
        rec = by_date.get(date)
        if rec is None:
            if last is None:
                raise IntegrityError(f"macro series starts after calendar date {date}")
            rec = MacroRecord(date=date, oil=last.oil, treasury_10y=last.treasury_10y,
                              dollar_index=last.dollar_index, vix=last.vix,
                              risk_free=last.risk_free, factor_mkt=last.factor_mkt,
                              factor_smb=last.factor_smb, factor_hml=last.factor_hml,
                              factor_umd=last.factor_umd, spy_return=last.spy_return)
        filled.append(rec)
        last = rec
    return filled


def ingest_csv(bars_path, macro_path):
    """Read, validate, and align both files; macro is filled to the bar calendar."""
    bars = read_bars(bars_path)
    macro = read_macro(macro_path)
    calendar = sorted({b.date for b in bars})
    return bars, forward_fill_macro(macro, calendar)


def write_bars_csv(path, bars):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BARS_COLUMNS)
        for b in bars:
            w.writerow([b.date, b.ticker, f"{b.close:.10g}", f"{b.volume:.10g}",
                        b.gsector, b.gsubind, f"{b.shares_outstanding:.10g}",
                        f"{b.book_value:.10g}"])


def write_macro_csv(path, macro):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MACRO_COLUMNS)
        for m in macro:
            w.writerow([m.date] + [f"{v:.10g}" for v in (
                m.oil, m.treasury_10y, m.dollar_index, m.vix, m.risk_free,
                m.factor_mkt, m.factor_smb, m.factor_hml, m.factor_umd,
                m.spy_return)])
