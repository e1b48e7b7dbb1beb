# uncertainty/reports.py
"""
報告與不等式檢查 (bound check) 的資料型別。

每一筆 BoundCheck 都必須帶一個登記在 TAG_INDEX 的標籤，
輸出檔 (checks.csv、plot 檔頭) 的說明文字也都從這裡來。
"""
import math
from dataclasses import dataclass, field
from typing import Any

# 文件索引：標籤 → 說明。README 的對照表就是這一份。
TAG_INDEX: dict[str, str] = {
    # 製備不確定關係
    'prep-variance': 'Delta(Q,psi) * Delta(P,psi) >= hbar/2',
    'prep-width': 'W_eps1(Q,psi) * W_eps2(P,psi) >= 2 pi hbar (1 - eps1 - eps2)^2',
    'prep-width-refined': 'W_eps1(Q,psi) * W_eps2(P,psi) >= 2 pi hbar (sqrt((1-eps1)(1-eps2)) - sqrt(eps1 eps2))^2',
    'target-spreads': 'Gaussian eta_{a,b} reproduces the requested (delta_q, delta_p)',
    # 集中問題 (Landau-Pollak) 與週期函數
    'trace-identity': 'tr Q(X)P(Y)Q(X) = |X| |Y| / (2 pi hbar)',
    'two-route': 'max eig(Q(X) + P(Y)) = 1 + sqrt(a0)',
    'localization-bound': 'prob^Q(X) + prob^P(Y) <= 1 + sqrt(a0) < 2',
    'concentration-area': '|X| |Y| >= 2 pi hbar (1 - eps1 - eps2)^2',
    'a0-monotone': 'a0 is nondecreasing in the area |X| |Y|',
    'periodic-commute': '[Q^g, P^h] = 0 when 2 pi hbar / (a b) is a positive integer',
    'periodic-noncommute': '[Q^g, P^h] != 0 when 2 pi hbar / (a b) is not an integer',
    # 協變相空間觀測量
    'noise': 'Delta(mu_T)^2 * Delta(nu_T)^2 >= hbar^2/4',
    'smeared-spread': 'Delta(G1,psi) * Delta(G2,psi) >= hbar',
    'resolution': 'W_eps1(mu_T) * W_eps2(nu_T) >= 2 pi hbar (1 - eps1 - eps2)^2',
    'standard-error': 'eps(G1,Q) * eps(G2,P) >= hbar/2',
    'distance': 'd(G1,Q) * d(G2,P) >= C hbar, C = 0.3047',
    'error-bar': 'W_eps1(G1,Q) * W_eps2(G2,P) >= 2 pi hbar (1 - eps1 - eps2)^2',
    'husimi-marginal': 'Husimi marginals equal prob_psi convolved with mu_T / nu_T (total variation)',
    'husimi-covariance': 'Husimi density of W(q,p)psi is the translated density',
    'werner-constant': 'minimal distance product over pure T reproduces C = 0.3047 (2%)',
    'werner-excited': 'optimal T has mass outside the oscillator ground state',
    'warp-error-bar': 'warped marginal keeps a finite calibrated error bar',
    'warp-noncovariant': 'nonlinear warp breaks translation covariance (total variation > 1e-3)',
    # 序列量測 (standard model)
    'kraus-completeness': 'sum_q K_q^* K_q dq = identity',
    'sequential-marginal-q': 'first marginal = prob^Q_psi convolved with mu (total variation)',
    'sequential-marginal-p': 'second marginal = prob^P_psi convolved with nu (total variation)',
    'sequential-husimi': 'sequential joint density = covariant density for T = |Psi^(lambda)><Psi^(lambda)|',
    'disturbance-standard-error': 'eps(M1,Q) * eps(M2,P) >= hbar/2 (inaccuracy x disturbance)',
    'disturbance-distance': 'd(M1,Q) * d(M2,P) >= C hbar (inaccuracy x disturbance)',
    'disturbance-error-bar': 'W_eps1(M1,Q) * W_eps2(M2,P) >= 2 pi hbar (1 - eps1 - eps2)^2 (inaccuracy x disturbance)',
    # Arthurs-Kelly
    'ak-noise': 'Delta(mu_gamma)^2 * Delta(nu_gamma)^2 >= hbar^2/4',
    'ak-q-term': 'Q_gamma term >= hbar^2/8',
    'ak-d-term': 'D term >= (hbar^2/16)(x + 1/x) >= hbar^2/8',
    'ak-decomposition': 'Q + D = Delta(mu)^2 * Delta(nu)^2',
    'ak-undisturbed': '[Delta(P2)^2/kappa^2] [kappa^2 Delta(Q2)^2] >= hbar^2/4 at gamma = -1',
    'ak-unitarity': 'three-factor coupling preserves the norm',
    'ak-simulation': 'simulated readout variances match the analytic variances (relative)',
    'ak-readout-mean': 'readout means reproduce <Q>_psi and <P>_psi',
}

# 共變距離不確定關係的常數
WERNER_C = 0.3047


class UnknownTagError(KeyError):
    pass


@dataclass
class BoundCheck:
    """
    單一不等式檢查：lhs (relation) rhs，允許 tol 的數值容許值。
    relation: '>=', '<=', '<', '=='
    """
    tag: str
    lhs: float
    rhs: float
    relation: str = '>='
    tol: float = 0.0
    label: str = ''

    def __post_init__(self):
        if self.tag not in TAG_INDEX:
            raise UnknownTagError(self.tag)
        if self.relation not in ('>=', '<=', '<', '=='):
            raise ValueError(f"unknown relation {self.relation!r}")
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)

    @property
    def description(self) -> str:
        return TAG_INDEX[self.tag]

    @property
    def margin(self) -> float:
        if self.relation == '>=':
            return self.lhs - self.rhs
        if self.relation == '==':
            return self.tol - abs(self.lhs - self.rhs)
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        if not (math.isfinite(self.lhs) and math.isfinite(self.rhs)):
            return False
        if self.relation == '<':
            return self.lhs < self.rhs + self.tol
        if self.relation == '==':
            return self.margin >= 0
        return self.margin >= -self.tol

    def to_dict(self) -> dict:
        return {
            'tag': self.tag,
            'label': self.label,
            'description': self.description,
            'lhs': self.lhs,
            'relation': self.relation,
            'rhs': self.rhs,
            'tol': self.tol,
            'passed': self.passed,
            'margin': self.margin,
        }


@dataclass
class Series:
    """可輸出成 CSV / plot 檔的表格資料；kind='grid' 代表三欄的二維密度"""
    columns: list[str]
    rows: list[tuple]
    tag: str = ''
    description: str = ''
    kind: str = 'table'


@dataclass
class Report:
    name: str
    quantities: dict[str, Any] = field(default_factory=dict)
    checks: list[BoundCheck] = field(default_factory=list)
    series: dict[str, Series] = field(default_factory=dict)
    provenance: dict[str, Any] = field(default_factory=dict)

    def check(self, tag: str, lhs: float, rhs: float, relation: str = '>=', tol: float = 0.0,
              label: str = '') -> BoundCheck:
        bound_check = BoundCheck(tag=tag, lhs=lhs, rhs=rhs, relation=relation, tol=tol, label=label)
        self.checks.append(bound_check)
        return bound_check

    def add_series(self, name: str, series: Series) -> None:
        self.series[name] = series

    def merge(self, other: 'Report', prefix: str = '') -> 'Report':
        """把子報告併進來，數值鍵與 series 名稱加上 prefix"""
        for key, value in other.quantities.items():
            self.quantities[f"{prefix}{key}"] = value
        for bound_check in other.checks:
            if prefix and not bound_check.label:
                bound_check.label = prefix.rstrip('.')
            self.checks.append(bound_check)
        for key, value in other.series.items():
            self.series[f"{prefix}{key}"] = value
        return self

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed_checks(self) -> list[BoundCheck]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            'scenario': self.name,
            'passed': self.passed,
            'provenance': self.provenance,
            'quantities': self.quantities,
            'checks': [c.to_dict() for c in self.checks],
            'series': sorted(self.series),
        }
