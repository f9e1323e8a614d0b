"""Dataset container and on-disk schemas.

A dataset directory holds one CSV per observation type (fixed column names,
validated on load) plus `meta.json` describing stocks, fisheries, the age
structure and shared biology:

    catch_effort.csv     fishery,year,effort,catch
    spawner_counts.csv   stock,year,count,cv
    tag_releases.csv     cohort,release_year,released
    tag_recoveries.csv   cohort,fishery,year,count
    electrofishing.csv   stock,year,site,density,area
    smolt_traps.csv      stock,year,marked,captured,recaptured
    expert_pspc.csv      stock,prob,value
    external_sr.csv      stock,year,spawners,recruits
    m74.csv              year,families,affected
    reared_releases.csv  year,released

Years are calendar integers; `meta.json` fixes the modeled window
(year_start, n_years) and rows outside it are rejected. Missing files mean
"no data of that type", never imputation.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class FisheryDef:
    """Fishery configuration: `q` is the catchability used by the simulator
    and as the default prior center; selectivity covers age columns
    0..A_max (0 = post-smolt)."""

    id: str
    q: float
    selectivity: np.ndarray
    reporting_rate: float
    obs_sd: float

    def __post_init__(self):
        sel = np.asarray(self.selectivity, dtype=float)
        if self.q <= 0:
            raise ValidationError(f"fishery {self.id}: q must be > 0")
        if np.any(sel < 0) or np.any(sel > 1):
            raise ValidationError(f"fishery {self.id}: selectivity in [0, 1]")
        if not 0.0 <= self.reporting_rate <= 1.0:
            raise ValidationError(f"fishery {self.id}: reporting_rate in [0, 1]")
        if self.obs_sd <= 0:
            raise ValidationError(f"fishery {self.id}: obs_sd must be > 0")
        object.__setattr__(self, "selectivity", sel)


@dataclass(frozen=True)
class StockDef:
    id: str
    habitat_area: float  # units of 100 m^2, scales parr density to abundance

    def __post_init__(self):
        if self.habitat_area <= 0:
            raise ValidationError(f"stock {self.id}: habitat_area must be > 0")


@dataclass(frozen=True)
class CatchEffortRecord:
    fishery: str
    year: int
    effort: float
    catch: float

    def __post_init__(self):
        if self.effort < 0 or self.catch < 0:
            raise ValidationError("catch/effort must be >= 0")


@dataclass
class TagCohort:
    cohort: str
    release_year: int
    released: int
    recoveries: dict = field(default_factory=dict)  # (fishery, year) -> count

    def total_recovered(self):
        return sum(self.recoveries.values())


@dataclass(frozen=True)
class SpawnerCount:
    stock: str
    year: int
    count: float
    cv: float

    def __post_init__(self):
        if self.count < 0:
            raise ValidationError("spawner count must be >= 0")
        if self.cv <= 0:
            raise ValidationError("spawner cv must be > 0")


@dataclass(frozen=True)
class SmoltTrapRecord:
    stock: str
    year: int
    marked: int
    captured: int
    recaptured: int

    def __post_init__(self):
        if self.marked <= 0:
            raise ValidationError("trap: marked must be > 0")
        if self.recaptured > min(self.marked, self.captured):
            raise ValidationError("trap: recaptured > min(marked, captured)")
        if min(self.captured, self.recaptured) < 0:
            raise ValidationError("trap: counts must be >= 0")


@dataclass(frozen=True)
class ElectrofishingRecord:
    stock: str
    year: int
    site: str
    density: float  # parr per 100 m^2
    area: float

    def __post_init__(self):
        if self.density < 0 or self.area <= 0:
            raise ValidationError("electrofishing: density >= 0, area > 0")


@dataclass(frozen=True)
class SmoltLikelihoodApprox:
    stock: str
    year: int
    mu: float
    sd: float

    def __post_init__(self):
        if self.sd <= 0:
            raise ValidationError("smolt approx: sd must be > 0")


@dataclass(frozen=True)
class ExpertQuantiles:
    stock: str
    probs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if p.size < 2:
            raise ValidationError("expert quantiles: need >= 2 pairs")
        if np.any(p <= 0) or np.any(p >= 1) or np.any(np.diff(p) <= 0):
            raise ValidationError("expert quantiles: probs strictly increasing in (0,1)")
        if np.any(v <= 0) or np.any(np.diff(v) <= 0):
            raise ValidationError("expert quantiles: values strictly increasing, > 0")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class ExternalSRSeries:
    stock: str
    spawners: np.ndarray  # spawner/egg index
    recruits: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.spawners, dtype=float)
        r = np.asarray(self.recruits, dtype=float)
        if s.shape != r.shape or s.size == 0:
            raise ValidationError("external SR: paired nonempty series required")
        if np.any(s <= 0) or np.any(r <= 0):
            raise ValidationError("external SR: values must be > 0")
        object.__setattr__(self, "spawners", s)
        object.__setattr__(self, "recruits", r)


@dataclass(frozen=True)
class M74Record:
    year: int
    families: int
    affected: int

    def __post_init__(self):
        if not 0 <= self.affected <= self.families:
            raise ValidationError("m74: need 0 <= affected <= families")


@dataclass
class Dataset:
    """All observed series for one assessment, plus structural metadata."""

    year_start: int
    n_years: int
    max_sea_age: int
    smolt_delay: int
    stocks: list
    fisheries: list
    fecundity: np.ndarray
    female_prop: float
    m_post_smolt: float
    m_adult: float
    parr_lag: int = 1
    catch_effort: list = field(default_factory=list)
    spawner_counts: list = field(default_factory=list)
    tag_cohorts: list = field(default_factory=list)
    electrofishing: list = field(default_factory=list)
    smolt_traps: list = field(default_factory=list)
    expert_pspc: list = field(default_factory=list)
    external_sr: list = field(default_factory=list)
    m74: list = field(default_factory=list)
    reared_releases: dict = field(default_factory=dict)  # year -> released

    @property
    def stock_ids(self):
        return [s.id for s in self.stocks]

    @property
    def fishery_ids(self):
        return [f.id for f in self.fisheries]

    def stock_index(self, stock_id):
        try:
            return self.stock_ids.index(stock_id)
        except ValueError:
            raise ValidationError(f"unknown stock {stock_id!r}") from None

    def fishery_index(self, fishery_id):
        try:
            return self.fishery_ids.index(fishery_id)
        except ValueError:
            raise ValidationError(f"unknown fishery {fishery_id!r}") from None

    def year_index(self, year):
        t = int(year) - self.year_start
        if not 0 <= t < self.n_years:
            raise ValidationError(
                f"year {year} outside [{self.year_start}, "
                f"{self.year_start + self.n_years - 1}]")
        return t

    @property
    def years(self):
        return np.arange(self.year_start, self.year_start + self.n_years)

    def effort_grid(self):
        """(fisheries, years) effort matrix; missing cells are zero effort."""
        E = np.zeros((len(self.fisheries), self.n_years))
        for rec in self.catch_effort:
            E[self.fishery_index(rec.fishery), self.year_index(rec.year)] = \
                rec.effort
        return E

    def reared_grid(self):
        rel = np.zeros(self.n_years)
        for year, n in self.reared_releases.items():
            rel[self.year_index(year)] = n
        return rel

    def validate(self):
        if self.max_sea_age < 1 or self.smolt_delay < 1:
            raise ValidationError("max_sea_age and smolt_delay must be >= 1")
        if len(self.fecundity) != self.max_sea_age:
            raise ValidationError("fecundity length must equal max_sea_age")
        for f in self.fisheries:
            if len(f.selectivity) != self.max_sea_age + 1:
                raise ValidationError(
                    f"fishery {f.id}: selectivity length must be A_max+1")
        for rec in self.catch_effort:
            self.fishery_index(rec.fishery)
            self.year_index(rec.year)
        for rec in self.spawner_counts:
            self.stock_index(rec.stock)
            self.year_index(rec.year)
        for rec in self.smolt_traps + self.electrofishing:
            self.stock_index(rec.stock)
            self.year_index(rec.year)
        for rec in self.m74:
            self.year_index(rec.year)
        for c in self.tag_cohorts:
            self.year_index(c.release_year)
            if c.released <= 0:
                raise ValidationError(f"tag cohort {c.cohort}: released must be > 0")
            if c.total_recovered() > c.released:
                raise ValidationError(
                    f"tag cohort {c.cohort}: recoveries exceed releases")
            for (fishery, year) in c.recoveries:
                self.fishery_index(fishery)
                self.year_index(year)
                if year < c.release_year:
                    raise ValidationError(
                        f"tag cohort {c.cohort}: recovery in {year} predates "
                        f"release in {c.release_year}")
        for eq in self.expert_pspc:
            self.stock_index(eq.stock)
        return self


# -- CSV plumbing -----------------------------------------------------------

def _read_csv(path, columns):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        got = reader.fieldnames or []
        if list(got) != list(columns):
            raise ValidationError(
                f"{path}: expected columns {list(columns)}, got {got}")
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append({k: row[k] for k in columns})
            except KeyError as e:
                raise ValidationError(f"{path}:{lineno}: missing {e}") from None
    return rows


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(row)


def _num(path, row, key, kind=float):
    try:
        return kind(float(row[key])) if kind is int else kind(row[key])
    except (TypeError, ValueError):
        raise ValidationError(f"{path}: bad {key}={row[key]!r}") from None


def load_dataset(directory) -> Dataset:
    d = Path(directory)
    meta_path = d / "meta.json"
    if not meta_path.exists():
        raise ValidationError(f"{d}: meta.json not found")
    meta = json.loads(meta_path.read_text())
    ds = Dataset(
        year_start=int(meta["year_start"]),
        n_years=int(meta["n_years"]),
        max_sea_age=int(meta["max_sea_age"]),
        smolt_delay=int(meta["smolt_delay"]),
        stocks=[StockDef(s["id"], float(s["habitat_area"]))
                for s in meta["stocks"]],
        fisheries=[FisheryDef(f["id"], float(f["q"]),
                              np.asarray(f["selectivity"], dtype=float),
                              float(f["reporting_rate"]), float(f["obs_sd"]))
                   for f in meta["fisheries"]],
        fecundity=np.asarray(meta["fecundity"], dtype=float),
        female_prop=float(meta["female_prop"]),
        m_post_smolt=float(meta["m_post_smolt"]),
        m_adult=float(meta["m_adult"]),
        parr_lag=int(meta.get("parr_lag", 1)),
    )
    p = d / "catch_effort.csv"
    if p.exists():
        for row in _read_csv(p, ["fishery", "year", "effort", "catch"]):
            ds.catch_effort.append(CatchEffortRecord(
                row["fishery"], _num(p, row, "year", int),
                _num(p, row, "effort"), _num(p, row, "catch")))
    p = d / "spawner_counts.csv"
    if p.exists():
        for row in _read_csv(p, ["stock", "year", "count", "cv"]):
            ds.spawner_counts.append(SpawnerCount(
                row["stock"], _num(p, row, "year", int),
                _num(p, row, "count"), _num(p, row, "cv")))
    p = d / "tag_releases.csv"
    cohorts = {}
    if p.exists():
        for row in _read_csv(p, ["cohort", "release_year", "released"]):
            c = TagCohort(row["cohort"], _num(p, row, "release_year", int),
                          _num(p, row, "released", int))
            if c.cohort in cohorts:
                raise ValidationError(f"{p}: duplicate cohort {c.cohort}")
            cohorts[c.cohort] = c
    p = d / "tag_recoveries.csv"
    if p.exists():
        for row in _read_csv(p, ["cohort", "fishery", "year", "count"]):
            cid = row["cohort"]
            if cid not in cohorts:
                raise ValidationError(f"{p}: recovery for unknown cohort {cid}")
            key = (row["fishery"], _num(p, row, "year", int))
            cohorts[cid].recoveries[key] = \
                cohorts[cid].recoveries.get(key, 0) + _num(p, row, "count", int)
    ds.tag_cohorts = list(cohorts.values())
    p = d / "electrofishing.csv"
    if p.exists():
        for row in _read_csv(p, ["stock", "year", "site", "density", "area"]):
            ds.electrofishing.append(ElectrofishingRecord(
                row["stock"], _num(p, row, "year", int), row["site"],
                _num(p, row, "density"), _num(p, row, "area")))
    p = d / "smolt_traps.csv"
    if p.exists():
        for row in _read_csv(p, ["stock", "year", "marked", "captured",
                                 "recaptured"]):
            ds.smolt_traps.append(SmoltTrapRecord(
                row["stock"], _num(p, row, "year", int),
                _num(p, row, "marked", int), _num(p, row, "captured", int),
                _num(p, row, "recaptured", int)))
    p = d / "expert_pspc.csv"
    if p.exists():
        by_stock = {}
        for row in _read_csv(p, ["stock", "prob", "value"]):
            by_stock.setdefault(row["stock"], []).append(
                (_num(p, row, "prob"), _num(p, row, "value")))
        for stock, pairs in by_stock.items():
            pairs.sort()
            ds.expert_pspc.append(ExpertQuantiles(
                stock, np.array([x[0] for x in pairs]),
                np.array([x[1] for x in pairs])))
    p = d / "external_sr.csv"
    if p.exists():
        by_stock = {}
        for row in _read_csv(p, ["stock", "year", "spawners", "recruits"]):
            by_stock.setdefault(row["stock"], []).append(
                (_num(p, row, "year", int), _num(p, row, "spawners"),
                 _num(p, row, "recruits")))
        for stock, rows in sorted(by_stock.items()):
            rows.sort()
            ds.external_sr.append(ExternalSRSeries(
                stock, np.array([r[1] for r in rows]),
                np.array([r[2] for r in rows])))
    p = d / "m74.csv"
    if p.exists():
        for row in _read_csv(p, ["year", "families", "affected"]):
            ds.m74.append(M74Record(
                _num(p, row, "year", int), _num(p, row, "families", int),
                _num(p, row, "affected", int)))
    p = d / "reared_releases.csv"
    if p.exists():
        for row in _read_csv(p, ["year", "released"]):
            ds.reared_releases[_num(p, row, "year", int)] = \
                _num(p, row, "released")
    return ds.validate()


def save_dataset(ds: Dataset, directory):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    meta = {
        "year_start": ds.year_start,
        "n_years": ds.n_years,
        "max_sea_age": ds.max_sea_age,
        "smolt_delay": ds.smolt_delay,
        "stocks": [{"id": s.id, "habitat_area": s.habitat_area}
                   for s in ds.stocks],
        "fisheries": [{"id": f.id, "q": f.q,
                       "selectivity": list(f.selectivity),
                       "reporting_rate": f.reporting_rate,
                       "obs_sd": f.obs_sd} for f in ds.fisheries],
        "fecundity": list(ds.fecundity),
        "female_prop": ds.female_prop,
        "m_post_smolt": ds.m_post_smolt,
        "m_adult": ds.m_adult,
        "parr_lag": ds.parr_lag,
    }
    (d / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    if ds.catch_effort:
        _write_csv(d / "catch_effort.csv",
                   ["fishery", "year", "effort", "catch"],
                   [(r.fishery, r.year, repr(r.effort), repr(r.catch))
                    for r in ds.catch_effort])
    if ds.spawner_counts:
        _write_csv(d / "spawner_counts.csv", ["stock", "year", "count", "cv"],
                   [(r.stock, r.year, repr(r.count), repr(r.cv))
                    for r in ds.spawner_counts])
    if ds.tag_cohorts:
        _write_csv(d / "tag_releases.csv",
                   ["cohort", "release_year", "released"],
                   [(c.cohort, c.release_year, c.released)
                    for c in ds.tag_cohorts])
        rec_rows = []
        for c in ds.tag_cohorts:
            for (fishery, year), n in sorted(c.recoveries.items()):
                rec_rows.append((c.cohort, fishery, year, n))
        if rec_rows:
            _write_csv(d / "tag_recoveries.csv",
                       ["cohort", "fishery", "year", "count"], rec_rows)
    if ds.electrofishing:
        _write_csv(d / "electrofishing.csv",
                   ["stock", "year", "site", "density", "area"],
                   [(r.stock, r.year, r.site, repr(r.density), repr(r.area))
                    for r in ds.electrofishing])
    if ds.smolt_traps:
        _write_csv(d / "smolt_traps.csv",
                   ["stock", "year", "marked", "captured", "recaptured"],
                   [(r.stock, r.year, r.marked, r.captured, r.recaptured)
                    for r in ds.smolt_traps])
    if ds.expert_pspc:
        rows = []
        for eq in ds.expert_pspc:
            for prob, value in zip(eq.probs, eq.values):
                rows.append((eq.stock, repr(float(prob)), repr(float(value))))
        _write_csv(d / "expert_pspc.csv", ["stock", "prob", "value"], rows)
    if ds.external_sr:
        rows = []
        for series in ds.external_sr:
            for k, (s, r) in enumerate(zip(series.spawners, series.recruits)):
                rows.append((series.stock, k, repr(float(s)), repr(float(r))))
        _write_csv(d / "external_sr.csv",
                   ["stock", "year", "spawners", "recruits"], rows)
    if ds.m74:
        _write_csv(d / "m74.csv", ["year", "families", "affected"],
                   [(r.year, r.families, r.affected) for r in ds.m74])
    if ds.reared_releases:
        _write_csv(d / "reared_releases.csv", ["year", "released"],
                   [(y, repr(v)) for y, v in sorted(ds.reared_releases.items())])
    return d
