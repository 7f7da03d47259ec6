"""Daily-matrix ingestion, synthetic PV generation, and archive fetching.

The working representation is a (days, 27) matrix of aggregated PV power in
MW covering the 06:00-19:00 daytime window at 30-minute sampling, one row
per calendar day.  Ingestion is strict: a day missing any in-window sample,
or containing duplicates, negatives, or unparsable cells, is rejected (for
every site, so calendars stay aligned) and itemized in the report rather
than interpolated.
"""

from __future__ import annotations

import csv
import hashlib
import time as _time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from pathlib import Path

import numpy as np

from .errors import DataError, FetchError, IntegrityError, ShapeError

STEPS_PER_DAY = 27
WINDOW_START = time(6, 0)
WINDOW_END = time(19, 0)
INTERVAL_MINUTES = 30


def step_times() -> list[time]:
    """The 27 in-window sample times, 06:00 through 19:00 inclusive."""
    start = datetime(2000, 1, 1, WINDOW_START.hour, WINDOW_START.minute)
    return [
        (start + timedelta(minutes=INTERVAL_MINUTES * i)).time()
        for i in range(STEPS_PER_DAY)
    ]


def step_labels() -> list[str]:
    return [t.strftime("%H:%M") for t in step_times()]


@dataclass(frozen=True)
class DailyMatrix:
    """D x T grid of nonnegative PV power (MW) with its calendar."""

    values: np.ndarray
    dates: tuple[date, ...]
    name: str = ""

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2:
            raise ShapeError(f"values must be 2-D (days, steps), got shape {arr.shape}")
        if arr.shape[0] != len(self.dates):
            raise ShapeError(
                f"{arr.shape[0]} rows but {len(self.dates)} dates"
            )
        if not np.all(np.isfinite(arr)):
            raise DataError("matrix contains non-finite values")
        if np.any(arr < 0):
            raise DataError("matrix contains negative power values")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "dates", tuple(self.dates))

    @property
    def n_days(self) -> int:
        return self.values.shape[0]

    @property
    def steps(self) -> int:
        return self.values.shape[1]

    def take_days(self, start: int, stop: int) -> "DailyMatrix":
        return DailyMatrix(self.values[start:stop], self.dates[start:stop], self.name)


@dataclass
class IngestionReport:
    accepted_days: int = 0
    rejected_days: list[date] = field(default_factory=list)
    issues: list[str] = field(default_factory=list)


def load_csv(path, window_steps: int = STEPS_PER_DAY) -> tuple[list[DailyMatrix], IngestionReport]:
    """Read a long-format CSV (timestamp column + one value column per site).

    Every day must contain exactly the 27 in-window timestamps (06:00 and
    19:00 both included); incomplete or inconsistent days are rejected for
    all sites and itemized in the report.  Rows outside the daytime window
    are ignored.
    """
    expected_times = set(step_times())
    report = IngestionReport()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty CSV") from None
        if len(header) < 2:
            raise DataError(f"{path}: need a timestamp column plus at least one site column")
        site_names = header[1:]
        per_day: dict[date, dict[time, list[float]]] = {}
        bad_days: dict[date, list[str]] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                stamp = datetime.fromisoformat(row[0].strip())
            except ValueError:
                report.issues.append(f"line {line_no}: unparsable timestamp {row[0]!r}")
                continue
            day, tod = stamp.date(), stamp.time()
            if tod not in expected_times:
                continue
            if len(row) != len(site_names) + 1:
                bad_days.setdefault(day, []).append(f"line {line_no}: wrong column count")
                continue
            try:
                values = [float(cell) for cell in row[1:]]
            except ValueError:
                bad_days.setdefault(day, []).append(f"line {line_no}: non-numeric value")
                continue
            if any(not np.isfinite(v) or v < 0 for v in values):
                bad_days.setdefault(day, []).append(f"line {line_no}: negative or non-finite value")
                continue
            slot = per_day.setdefault(day, {})
            if tod in slot:
                bad_days.setdefault(day, []).append(f"line {line_no}: duplicate timestamp")
                continue
            slot[tod] = values

    ordered_times = step_times()
    kept_days = []
    for day in sorted(per_day):
        reasons = bad_days.get(day, [])
        missing = len(expected_times) - len(per_day[day])
        if missing:
            reasons = reasons + [f"{missing} missing in-window sample(s)"]
        if reasons:
            report.rejected_days.append(day)
            report.issues.extend(f"{day}: {r}" for r in reasons)
            continue
        kept_days.append(day)
    for day in sorted(set(bad_days) - set(per_day)):
        report.rejected_days.append(day)
        report.issues.extend(f"{day}: {r}" for r in bad_days[day])

    report.accepted_days = len(kept_days)
    matrices = []
    for s, name in enumerate(site_names):
        grid = np.array(
            [[per_day[day][tod][s] for tod in ordered_times] for day in kept_days]
        ).reshape(len(kept_days), window_steps)
        matrices.append(DailyMatrix(grid, tuple(kept_days), name=name))
    return matrices, report


def write_timeseries_csv(matrices: list[DailyMatrix], path) -> None:
    """Write the long-format CSV that :func:`load_csv` reads back."""
    if not matrices:
        raise DataError("nothing to write")
    calendar = matrices[0].dates
    for m in matrices[1:]:
        if m.dates != calendar:
            raise DataError("matrices have different calendars")
    times = step_times()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp"] + [m.name or f"site_{i + 1}" for i, m in enumerate(matrices)])
        for d_idx, day in enumerate(calendar):
            for t_idx, tod in enumerate(times):
                stamp = datetime.combine(day, tod).isoformat()
                writer.writerow([stamp] + [repr(float(m.values[d_idx, t_idx])) for m in matrices])


def write_matrix_csv(matrix: DailyMatrix, path) -> None:
    """Wide export: header of step labels, one row per date."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + step_labels())
        for day, row in zip(matrix.dates, matrix.values):
            writer.writerow([day.isoformat()] + [repr(float(v)) for v in row])


def read_matrix_csv(path, name: str = "") -> DailyMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:1] != ["date"]:
            raise DataError(f"{path}: expected a 'date' header column")
        dates, rows = [], []
        for row in reader:
            if not row:
                continue
            dates.append(date.fromisoformat(row[0]))
            rows.append([float(v) for v in row[1:]])
    return DailyMatrix(np.asarray(rows), tuple(dates), name=name)


def aggregate_sites(matrices: list[DailyMatrix], name: str = "state") -> DailyMatrix:
    """Element-wise sum of per-site matrices sharing one calendar."""
    if not matrices:
        raise DataError("no matrices to aggregate")
    calendar = matrices[0].dates
    shape = matrices[0].values.shape
    for m in matrices[1:]:
        if m.dates != calendar:
            raise DataError(f"calendar mismatch between {matrices[0].name!r} and {m.name!r}")
        if m.values.shape != shape:
            raise ShapeError("matrices have different shapes")
    total = np.sum([m.values for m in matrices], axis=0)
    return DailyMatrix(total, calendar, name=name)


def synthesize_pv(
    days: int,
    sites: int = 1,
    seed: int = 0,
    capacity_mw: float = 100.0,
    cloud_noise: float = 0.2,
    seasonal_amplitude: float = 0.35,
    start: date = date(2019, 1, 1),
) -> list[DailyMatrix]:
    """Deterministic synthetic PV series for desk-scale experiments.

    Each day is a clear-sky bell (exactly zero at the first and last step)
    scaled by a sinusoidal annual season (peaking at the start date, i.e. an
    austral summer) and multiplied by clipped multiplicative cloud noise
    made of a day-level and a step-level term.
    """
    if days < 16:
        raise DataError(f"need at least 16 days (padder warm-up + 1), got {days}")
    if sites < 1:
        raise DataError("need at least one site")
    t = np.arange(STEPS_PER_DAY)
    bell = np.sin(np.pi * t / (STEPS_PER_DAY - 1)) ** 2
    bell[0] = bell[-1] = 0.0
    d = np.arange(days)
    # 365-day period exactly, so noiseless days one year apart are identical
    seasonal = 1.0 + seasonal_amplitude * np.cos(2.0 * np.pi * d / 365.0)
    dates = tuple(start + timedelta(days=int(i)) for i in d)
    matrices = []
    for s in range(sites):
        rng = np.random.default_rng(np.random.SeedSequence((seed, s)))
        site_capacity = capacity_mw * (0.8 + 0.4 * rng.random())
        day_factor = np.clip(1.0 + cloud_noise * rng.standard_normal(days), 0.05, None)
        step_factor = np.clip(
            1.0 + cloud_noise * rng.standard_normal((days, STEPS_PER_DAY)), 0.05, None
        )
        values = (
            site_capacity
            * seasonal[:, None]
            * bell[None, :]
            * day_factor[:, None]
            * step_factor
        )
        matrices.append(DailyMatrix(values, dates, name=f"site_{s + 1}"))
    return matrices


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def fetch_archive(
    base_url: str,
    date_range: tuple[date, date],
    cache_dir,
    filename_pattern: str = "PUBLIC_DISPATCHSCADA_{date}.zip",
    retries: int = 3,
    backoff_s: float = 0.5,
) -> list[Path]:
    """Download one archive file per day into a checksummed cache.

    A cached file whose sidecar checksum matches is never re-fetched;
    downloads land in a temporary file first so a failure leaves no partial
    cache entry.  A checksum mismatch on an existing entry raises rather
    than silently re-downloading.
    """
    start, end = date_range
    if end < start:
        raise DataError(f"empty date range {start}..{end}")
    cache = Path(cache_dir)
    cache.mkdir(parents=True, exist_ok=True)
    out = []
    day = start
    while day <= end:
        filename = filename_pattern.format(date=day.strftime("%Y%m%d"))
        target = cache / filename
        sidecar = cache / (filename + ".sha256")
        if target.exists() and sidecar.exists():
            if _sha256(target) != sidecar.read_text().strip():
                raise IntegrityError(f"{target}: checksum mismatch; remove to re-fetch")
            out.append(target)
            day += timedelta(days=1)
            continue
        url = base_url.rstrip("/") + "/" + filename
        payload = None
        last_error: Exception | None = None
        for attempt in range(retries):
            try:
                with urllib.request.urlopen(url) as response:
                    payload = response.read()
                break
            except (urllib.error.URLError, OSError) as exc:
                last_error = exc
                if attempt + 1 < retries:
                    _time.sleep(backoff_s * 2**attempt)
        if payload is None:
            raise FetchError(f"failed to fetch {url} after {retries} attempts: {last_error}")
        tmp = target.with_suffix(target.suffix + ".tmp")
        tmp.write_bytes(payload)
        tmp.replace(target)
        sidecar.write_text(_sha256(target) + "\n")
        out.append(target)
        day += timedelta(days=1)
    return out
