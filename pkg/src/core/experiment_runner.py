"""
实验运行器

把实验配置分派到各模块的扫描过程，评估判据，写出 CSV 与 JSON 记录，并汇总报告。
"""

import asyncio
import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src import __version__
from src.core.advice_net import decode_witness, encode_witness
from src.core.gnm import GnmVerifierOptions, gnm_verify
from src.core.gnm_prover import CHEATING_STRATEGIES, cheating_witness, honest_gnm_witness, make_gnm_instance
from src.core.hybrid import (amplification_algorithm, grover_algorithm, lower_bound_sweep,
                             preparation_algorithm, run_hybrid)
from src.core.pseudorandom import (HaarEnsemble, PreparedStateEnsemble, SigmaKEnsemble,
                                   AffineUnitaryFamily, MIN_COLLISION_SAMPLES, check_affine_family,
                                   collision_estimate, diagonal_sign_family, haar_collision,
                                   pauli_family, precision_bits, prepare_random_state)
from src.core.search import query_budget
from src.core.statevec import haar_sample
from src.models.experiment import SCHEMAS, ExperimentConfig, RunRecord
from src.utils.config import Config
from src.utils.errors import ConfigError, CriteriaError, ValidationError
from src.utils.logger import Logger, log_context
from src.utils.rng import RngSeed

logger = Logger.get_logger(__name__)

DELTA_TOLERANCE = 1e-9
ALGORITHMS = ("grover", "amplify", "prepare")


def build_experiment_config(experiment: str, config: Optional[Config] = None,
                            overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    合并实验配置：参数表默认值 ← 配置文件 experiments.<id> 与 run.* ← 命令行

    Args:
        experiment: 实验 id
        config: 应用配置
        overrides: 命令行覆盖项，键为 seed/trials/output/threads 或实验参数名；值为 None 的项忽略
    """
    config = config or Config()
    if experiment not in SCHEMAS:
        raise ConfigError(f"未知实验: {experiment}")
    file_params = config.get(f"experiments.{experiment}", {}) or {}
    if not isinstance(file_params, dict):
        raise ConfigError(f"experiments.{experiment} 必须是映射")
    data: Dict[str, Any] = {
        "experiment": experiment,
        "params": dict(file_params),
        "seed": config.get("run.seed", 0),
        "trials": config.get("run.trials", 100),
        "output": config.get("harness.output_dir", "results"),
        "threads": config.get("harness.threads", 1)
    }
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in ("seed", "trials", "output", "threads"):
            data[key] = value
        else:
            data["params"][key] = value
    for key in ("seed", "trials", "threads"):
        try:
            data[key] = int(data[key])
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{key} 必须是整数: {data[key]!r}") from e
    return ExperimentConfig.from_dict(data)


def _parallel_map(func: Callable[[int], Any], count: int, threads: int) -> List[Any]:
    """按下标顺序返回结果，与线程数无关"""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, range(count)))
    return [func(i) for i in range(count)]


class ExperimentRunner:
    """
    实验运行器

    每个实验 id 对应一个 _run_* 方法，返回 (行, 摘要, 判据失败列表)。
    """

    def __init__(self, config: Optional[Config] = None):
        """
        初始化运行器

        Args:
            config: 应用配置，决定是否写出 CSV/JSON
        """
        self.config = config or Config()
        self.logger = Logger.get_logger(__name__)
        self._dispatch: Dict[str, Callable[[ExperimentConfig], Tuple[list, dict, list]]] = {
            "grover-advice": self._run_grover_advice,
            "hybrid": self._run_hybrid,
            "ensemble": self._run_ensemble,
            "randstate": self._run_randstate,
            "gnm": self._run_gnm,
            "affine-check": self._run_affine_check,
        }

    # ==================== 运行 ====================

    def run(self, exp: ExperimentConfig, write: bool = True) -> RunRecord:
        """
        运行一个实验

        Args:
            exp: 实验配置
            write: 是否写出结果文件（输出目录取 exp.output）

        Returns:
            运行记录；failures 列出未满足的判据
        """
        started = time.perf_counter()
        with log_context(self.logger, "INFO", f"实验 {exp.experiment} (seed={exp.seed}, trials={exp.trials})"):
            rows, summary, failures = self._dispatch[exp.experiment](exp)
        record = RunRecord(
            config=exp.to_dict(),
            config_hash=exp.config_hash,
            rows=rows,
            summary=summary,
            wall_time=time.perf_counter() - started,
            version=__version__,
            failures=failures
        )
        for failure in failures:
            self.logger.warning(f"判据未满足: {failure}")
        if write and exp.output:
            self.write_record(record, exp.output)
        return record

    async def run_async(self, exp: ExperimentConfig, write: bool = True) -> RunRecord:
        """
        异步运行一个实验

        Args:
            exp: 实验配置
            write: 是否写出结果文件

        Returns:
            运行记录
        """
        loop = asyncio.get_event_loop()
        return await loop.run_in_executor(None, self.run, exp, write)

    def check(self, record: RunRecord) -> None:
        """
        Raises:
            CriteriaError: 记录中有未满足的判据
        """
        if record.failures:
            raise CriteriaError(f"{record.experiment}: {len(record.failures)} 项判据未满足", record.failures)

    # ==================== 各实验 ====================

    def _run_grover_advice(self, exp: ExperimentConfig):
        p = exp.params
        rows = lower_bound_sweep(p["n_values"], p["m_values"], exp.trials, RngSeed(exp.seed),
                                 budgets=p["budgets"] or None, threads=exp.threads,
                                 with_hybrid=p["hybrid"], dense=p["dense_budgets"])
        summary: Dict[str, Any] = {"cells": []}
        failures = []
        for n in sorted(set(p["n_values"])):
            for m in sorted(set(p["m_values"])):
                cell = [row for row in rows if row["n"] == n and row["m"] == m]
                full = max(cell, key=lambda row: row["T"])
                reached = [row["T"] for row in cell if row["success"] >= 0.5]
                info = {
                    "n": n,
                    "m": m,
                    "full_budget": query_budget(n, max(m, n + 2)) + 1,
                    "success_at_max_T": full["success"],
                    "T_star": min(reached) if reached else None
                }
                summary["cells"].append(info)
                if full["T"] >= info["full_budget"] and full["success"] < 2.0 / 3.0:
                    failures.append(f"n={n}, m={m}: 满预算成功率 {full['success']:.3f} < 2/3")
        for row in rows:
            if row["max_delta_violation"] > DELTA_TOLERANCE:
                failures.append(f"n={row['n']}, m={row['m']}, T={row['T']}: 混合不等式违背 {row['max_delta_violation']:.3e}")
            if row["bias_violations"]:
                failures.append(f"n={row['n']}, m={row['m']}, T={row['T']}: 偏差超过总距离")
        return rows, summary, failures

    def _build_algorithm(self, exp: ExperimentConfig, psi):
        p = exp.params
        if p["algorithm"] == "grover":
            return grover_algorithm(p["n"], p["iterations"])
        if p["algorithm"] == "amplify":
            m_eff = max(p["m"], p["n"] + 2)
            return amplification_algorithm(decode_witness(encode_witness(psi, m_eff)), p["iterations"])
        if p["algorithm"] == "prepare":
            return preparation_algorithm(psi)
        raise ConfigError(f"未知算法: {p['algorithm']}")

    def _run_hybrid(self, exp: ExperimentConfig):
        p = exp.params
        base = RngSeed(exp.seed)
        if p["algorithm"] not in ALGORITHMS:
            raise ConfigError(f"未知算法: {p['algorithm']}，可选 {', '.join(ALGORITHMS)}")

        def trial(t: int) -> Dict[str, Any]:
            seed = base.spawn(t)
            psi = haar_sample(p["n"], seed.spawn(0))
            transcript = run_hybrid(self._build_algorithm(exp, psi), psi)
            return {
                "trial": t,
                "T": transcript.T,
                "mean_delta": transcript.mean_delta,
                "max_violation": transcript.max_violation,
                "total_delta": transcript.total_delta,
                "bias": transcript.bias if transcript.bias is not None else ""
            }

        rows = _parallel_map(trial, exp.trials, exp.threads)
        N = 1 << p["n"]
        summary = {
            "max_violation": max(row["max_violation"] for row in rows),
            "mean_delta": float(np.mean([row["mean_delta"] for row in rows])),
            "reference_delta": 2.0 / math.sqrt(N)
        }
        failures = []
        if summary["max_violation"] > DELTA_TOLERANCE:
            failures.append(f"逐步不等式违背 {summary['max_violation']:.3e}")
        for row in rows:
            if row["bias"] != "" and row["bias"] > row["total_delta"] + DELTA_TOLERANCE:
                failures.append(f"试验 {row['trial']}: 偏差 {row['bias']:.6f} 超过总距离 {row['total_delta']:.6f}")
        return rows, summary, failures

    def _run_ensemble(self, exp: ExperimentConfig):
        p = exp.params
        if p["samples"] < MIN_COLLISION_SAMPLES:
            raise ConfigError(f"ensemble.samples 至少为 {MIN_COLLISION_SAMPLES}: {p['samples']}")
        if p["ensemble"] == "sigma":
            ensemble = SigmaKEnsemble(p["n"], p["k"])
        elif p["ensemble"] == "haar":
            ensemble = HaarEnsemble(p["n"])
        elif p["ensemble"] == "prepared":
            ensemble = PreparedStateEnsemble(p["n"], p["precision"])
        else:
            raise ConfigError(f"未知系综: {p['ensemble']}")
        estimate = collision_estimate(ensemble, p["samples"], RngSeed(exp.seed))
        N = 1 << p["n"]
        haar = haar_collision(N)
        rows = [{
            "ensemble": p["ensemble"],
            "n": p["n"],
            "k": p["k"] if p["ensemble"] == "sigma" else "",
            "samples": p["samples"],
            "collision": estimate.mean,
            "std_error": estimate.std_error,
            "haar": haar
        }]
        failures = []
        if p["ensemble"] == "sigma" and p["k"] == 1:
            if abs(estimate.mean - 1.0 / N) > 1e-12:
                failures.append(f"k=1 碰撞概率 {estimate.mean!r} 不等于 1/N")
        elif p["ensemble"] == "haar":
            if not estimate.within(haar):
                failures.append(f"Haar 碰撞概率 {estimate.mean:.6f} 偏离 2/(N+1)={haar:.6f} 超过 3σ")
        elif p["ensemble"] == "prepared" or p["k"] >= 2:
            if abs(estimate.mean - haar) > 0.05 * haar:
                failures.append(f"碰撞概率 {estimate.mean:.6f} 与 Haar 值 {haar:.6f} 相差超过 5%")
        return rows, {"collision": estimate.to_dict(), "haar": haar}, failures

    def _run_randstate(self, exp: ExperimentConfig):
        p = exp.params
        q = precision_bits(p["n"], p["precision"])
        base = RngSeed(exp.seed)

        def trial(t: int):
            result = prepare_random_state(p["n"], p["precision"], seed=base.spawn(t),
                                          max_attempts=p["max_attempts"] or None)
            return result

        results = _parallel_map(trial, exp.trials, exp.threads)
        rows = [{"trial": t, "attempts": r.attempts, "mean_flag_probability": r.mean_flag_probability}
                for t, r in enumerate(results)]
        flags = [f for r in results for f in r.flag_probabilities]
        summary = {
            "q": q,
            "mean_attempts": float(np.mean([r.attempts for r in results])),
            "mean_flag_probability": float(np.mean(flags)),
            "lower": 0.5 / q,
            "upper": 2.0 / q
        }
        failures = []
        if not summary["lower"] <= summary["mean_flag_probability"] <= summary["upper"]:
            failures.append(f"标志概率 {summary['mean_flag_probability']:.6f} 不在 [0.5/q, 2/q] 内")
        if not q / 2.0 <= summary["mean_attempts"] <= 2.0 * q:
            failures.append(f"平均尝试次数 {summary['mean_attempts']:.1f} 与 q={q} 相差超过 2 倍")
        return rows, summary, failures

    def _run_gnm(self, exp: ExperimentConfig):
        p = exp.params
        base = RngSeed(exp.seed)
        options = GnmVerifierOptions(r=p["r"], kernel_mode=p["kernel_mode"], cross_check=True)
        reference = make_gnm_instance(p["catalog_id"], p["params"], p["h"], p["x"], seed=base.spawn(0))
        member = reference.member
        jobs = [("honest", t) for t in range(exp.trials)]
        jobs += [(CHEATING_STRATEGIES[i % len(CHEATING_STRATEGIES)], i) for i in range(p["cheating"])]

        def job(index: int) -> Dict[str, Any]:
            kind, t = jobs[index]
            instance = make_gnm_instance(p["catalog_id"], p["params"], p["h"], p["x"], seed=base.spawn(0))
            if kind == "honest":
                witness = honest_gnm_witness(instance, base.spawn(1, t))
            else:
                witness = cheating_witness(instance, kind, base.spawn(3, t))
            report = gnm_verify(instance.oracle, instance.h_labels, instance.x_label, witness,
                                base.spawn(2, index), options)
            return {
                "index": index,
                "witness": kind,
                "accepted": report.accepted,
                "failed_step": report.failed_step or "",
                "queries": report.queries,
                "query_bound": report.query_bound,
                "kernel_agree": report.details.get("kernel_agree", "")
            }

        rows = _parallel_map(job, len(jobs), exp.threads)
        honest = [row for row in rows if row["witness"] == "honest"]
        cheats = [row for row in rows if row["witness"] != "honest"]
        acceptance = sum(row["accepted"] for row in honest) / len(honest)
        summary = {
            "instance": reference.describe(),
            "member": member,
            "honest_acceptance": acceptance,
            "cheating_accepted": sum(row["accepted"] for row in cheats),
            "max_queries": max(row["queries"] for row in rows),
            "query_bound": rows[0]["query_bound"],
            "kernel_disagreements": sum(1 for row in rows if row["kernel_agree"] is False)
        }
        failures = []
        if not member and acceptance < 2.0 / 3.0:
            failures.append(f"x ∉ H 时诚实见证接受率 {acceptance:.3f} < 2/3")
        if member and 1.0 - acceptance < 2.0 / 3.0:
            failures.append(f"x ∈ H 时拒绝率 {1.0 - acceptance:.3f} < 2/3")
        if member and summary["cheating_accepted"]:
            failures.append(f"x ∈ H 时 {summary['cheating_accepted']} 个作弊见证被接受")
        if summary["max_queries"] > summary["query_bound"]:
            failures.append(f"查询数 {summary['max_queries']} 超过上界 {summary['query_bound']}")
        if summary["kernel_disagreements"]:
            failures.append(f"{summary['kernel_disagreements']} 个见证的 ehk 核与穷举核不一致")
        return rows, summary, failures

    def _run_affine_check(self, exp: ExperimentConfig):
        p = exp.params
        if p["family"] == "pauli":
            family, self_relation = pauli_family(), False
        elif p["family"] == "diagonal":
            family, self_relation = diagonal_sign_family(p["N"]), True
        else:
            raise ConfigError(f"未知矩阵族: {p['family']}")
        report = check_affine_family(family, require_self_relation=self_relation)
        N = family.N
        rng = RngSeed(exp.seed).generator()

        rows = []
        failed_extensions = 0
        missing = 2 * N + 1 - report.nonzero_count
        for i in range(p["extensions"]):
            extra = [rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N)) for _ in range(missing)]
            extended = AffineUnitaryFamily(N=N, E=tuple(family.E) + tuple(extra))
            check = check_affine_family(extended, require_self_relation=False)
            failed_extensions += bool(check.pair_violations)
            rows.append({"extension": i, "size": len(extended), "pair_violations": len(check.pair_violations)})

        summary = dict(report.to_dict())
        summary["failed_extensions"] = failed_extensions
        failures = []
        if not report.relations_hold:
            failures.append("矩阵族不满足仿射关系")
        if not report.nonzero_bound_holds or not report.distinct_bound_holds:
            failures.append(f"非零成员 {report.nonzero_count} 超过 2N={2 * N}")
        if p["family"] == "pauli" and report.nonzero_count != 2 * N:
            failures.append(f"Pauli 族应达到 M=2N，实际 {report.nonzero_count}")
        if failed_extensions != p["extensions"]:
            failures.append(f"{p['extensions'] - failed_extensions} 个扩展未违背两两关系")
        return rows, summary, failures

    # ==================== 输出 ====================

    def record_stem(self, record: RunRecord) -> str:
        return f"{record.experiment}-{record.config_hash[:12]}"

    def write_record(self, record: RunRecord, output_dir: Union[str, Path]) -> List[Path]:
        """
        写出 CSV（规范输出）与 JSON 镜像

        Returns:
            写出的文件路径列表
        """
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        stem = self.record_stem(record)
        if self.config.get("harness.write_csv", True):
            written.append(write_csv(record.rows, out / f"{stem}.csv"))
        if self.config.get("harness.write_json", True):
            path = out / f"{stem}.json"
            with open(path, "w", encoding="utf-8") as f:
                json.dump(record.to_dict(), f, ensure_ascii=False, indent=2, default=str)
            written.append(path)
        self.logger.info(f"写出实验记录: {', '.join(str(p) for p in written)}")
        return written

    @staticmethod
    def load_records(paths: Sequence[Union[str, Path]]) -> List[RunRecord]:
        records = []
        for path in paths:
            with open(path, "r", encoding="utf-8") as f:
                records.append(RunRecord.from_dict(json.load(f)))
        return records

    # ==================== 汇总 ====================

    def report(self, records: Sequence[RunRecord]) -> Dict[str, Any]:
        """
        汇总多条记录：概览表、下界扫描表 (n, m, T, success)、各单元的 T* 与标度拟合指数

        输出只依赖记录内容，与记录顺序无关。

        Raises:
            ValidationError: 记录为空
        """
        if not records:
            raise ValidationError("没有可汇总的运行记录")
        ordered = sorted(records, key=lambda r: (r.experiment, r.config_hash))
        overview = [{
            "experiment": r.experiment,
            "config_hash": r.config_hash[:12],
            "rows": len(r.rows),
            "passed": r.passed
        } for r in ordered]

        sweep: Dict[Tuple[int, int, int], Dict[str, Any]] = {}
        for r in ordered:
            if r.experiment != "grover-advice":
                continue
            for row in r.rows:
                key = (int(row["n"]), int(row["m"]), int(row["T"]))
                entry = sweep.setdefault(key, {"n": key[0], "m": key[1], "T": key[2], "trials": 0,
                                               "successes": 0, "probability_sum": 0.0})
                entry["trials"] += int(row["trials"])
                entry["successes"] += int(row["successes"])
                entry["probability_sum"] += float(row.get("probability", 0.0)) * int(row["trials"])
        sweep_rows = []
        for key in sorted(sweep):
            entry = sweep[key]
            total = entry.pop("probability_sum")
            entry["success"] = entry["successes"] / entry["trials"] if entry["trials"] else 0.0
            entry["probability"] = total / entry["trials"] if entry["trials"] else 0.0
            sweep_rows.append(entry)

        thresholds = threshold_table(sweep_rows)

        return {
            "overview": overview,
            "sweep": sweep_rows,
            "thresholds": thresholds,
            "scaling_exponent": scaling_exponent(thresholds)
        }

    def write_report(self, summary: Dict[str, Any], output_dir: Union[str, Path]) -> List[Path]:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = [write_csv(summary["overview"], out / "report-overview.csv")]
        if summary["sweep"]:
            written.append(write_csv(summary["sweep"], out / "report-sweep.csv"))
            written.append(write_csv(summary["thresholds"], out / "report-thresholds.csv"))
        self.logger.info(f"写出汇总报告: {', '.join(str(p) for p in written)}")
        return written


def threshold_table(sweep_rows: Sequence[Dict[str, Any]], key: str = "success",
                    level: float = 0.5) -> List[Dict[str, Any]]:
    """
    各 (n, m) 单元的 T*：sweep_rows[key] ≥ level 的最小预算 T

    key 取 "success"（观测成功率）或 "probability"（精确接受概率的平均，无抽样噪声）。
    """
    thresholds = []
    for n, m in sorted({(int(row["n"]), int(row["m"])) for row in sweep_rows}):
        reached = [int(row["T"]) for row in sweep_rows
                   if row["n"] == n and row["m"] == m and row[key] >= level]
        thresholds.append({"n": n, "m": m, "T_star": min(reached) if reached else None,
                           "scale": math.sqrt((1 << n) / (m + 1))})
    return thresholds


def scaling_exponent(thresholds: Sequence[Dict[str, Any]]) -> Optional[float]:
    """
    放大轮数 T*−1 对 log sqrt(2^n/(m+1)) 的最小二乘斜率

    T* 含最后一次 Hadamard 测试，这一次与尺度无关，按 T* 直接拟合会把斜率压低。
    T* = 1（不放大即过阈值）的单元不参与拟合；剩余点少于两个不同尺度时为 None。
    """
    points = [(row["scale"], row["T_star"] - 1) for row in thresholds if row["T_star"] and row["T_star"] > 1]
    if len({scale for scale, _ in points}) < 2:
        return None
    x = np.log([scale for scale, _ in points])
    y = np.log([float(t) for _, t in points])
    return float(np.polyfit(x, y, 1)[0])


def write_csv(rows: Sequence[Dict[str, Any]], path: Union[str, Path]) -> Path:
    """按第一行的键顺序写出 CSV；浮点数用 repr 保证可复现"""
    path = Path(path)
    fields = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return path


def format_table(rows: Sequence[Dict[str, Any]]) -> str:
    """等宽文本表"""
    if not rows:
        return "(空)"
    fields = list(rows[0].keys())

    def cell(value: Any) -> str:
        if isinstance(value, float):
            return f"{value:.6g}"
        return "" if value is None else str(value)

    widths = [max(len(f), *(len(cell(row.get(f))) for row in rows)) for f in fields]
    lines = ["  ".join(f.ljust(w) for f, w in zip(fields, widths)),
             "  ".join("-" * w for w in widths)]
    for row in rows:
        lines.append("  ".join(cell(row.get(f)).ljust(w) for f, w in zip(fields, widths)))
    return "\n".join(lines)
