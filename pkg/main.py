#!/usr/bin/env python3
"""
QCMA Query Lab - 主入口

实验室的命令行入口：每个子命令对应一个实验，report 汇总已写出的 JSON 记录。
"""

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

# 添加src目录到Python路径
src_path = Path(__file__).parent / "src"
sys.path.insert(0, str(src_path))

from src.core.experiment_runner import ExperimentRunner, build_experiment_config, format_table
from src.models.experiment import EXPERIMENT_IDS
from src.utils.config import Config
from src.utils.errors import ConfigError, CriteriaError
from src.utils.logger import Logger, setup_logging

EXIT_OK = 0
EXIT_CRITERIA = 1
EXIT_CONFIG = 2


def initialize_logging(config: Config, level: Optional[str] = None) -> None:
    """
    初始化日志系统

    Args:
        config: 配置管理器实例
        level: 命令行指定的日志级别，覆盖配置文件
    """
    log_level = level or config.get("logging.level", "INFO")
    setup_logging(
        log_dir=config.get("logging.log_dir"),
        level=log_level,
        console_level=level or config.get("logging.console_level", "INFO"),
        file_level=config.get("logging.file_level", "DEBUG")
    )

    logger = Logger.get_logger(__name__)
    logger.info("=" * 50)
    logger.info(f"启动 {config.get('app.name', 'QCMA Query Lab')} v{config.get('app.version', '0.1.0')}")
    logger.info("=" * 50)


def load_config(path: Optional[str] = None) -> Config:
    """
    加载配置文件

    Args:
        path: 命令行指定的配置文件；未指定时依次查找默认位置。QLAB_ 环境变量覆盖文件中的键

    Returns:
        配置管理器实例

    Raises:
        ConfigError: 指定的文件不存在或无法解析
    """
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"配置文件不存在: {path}")
        config = Config()
        try:
            config.update(Config.read_file(Path(path)), auto_save=False)
        except (OSError, ValueError) as e:
            raise ConfigError(f"配置文件无法解析: {e}") from e
        return config.apply_env()

    config_paths = [
        "qlab.yaml",
        "qlab.yml",
        "qlab.json",
        os.path.expanduser("~/.config/qcma_lab/config.yaml"),
    ]
    for candidate in config_paths:
        if os.path.exists(candidate):
            return Config(candidate).apply_env()

    # 未找到配置文件，使用默认配置
    return Config().apply_env()


# ==================== 参数解析 ====================

def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"需要逗号分隔的整数: {text}") from e


def _json_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise argparse.ArgumentTypeError(f"需要 JSON 值: {text}") from e


def build_parser() -> argparse.ArgumentParser:
    """构建命令行解析器；全局参数在子命令前后均可出现"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=argparse.SUPPRESS, help="配置文件路径 (YAML/JSON)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="64 位随机种子")
    common.add_argument("--trials", type=int, default=argparse.SUPPRESS, help="每个单元的试验次数")
    common.add_argument("--out", type=str, default=argparse.SUPPRESS, help="结果输出目录")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="并行线程数")
    common.add_argument("--assert", dest="assert_criteria", action="store_true", default=argparse.SUPPRESS,
                        help="判据未满足时以状态码 1 退出")
    common.add_argument("--log-level", type=str, default=argparse.SUPPRESS, help="日志级别")

    parser = argparse.ArgumentParser(
        description="QCMA Query Lab - 量子查询复杂度实验室",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        parents=[common],
        epilog="""
示例:
  %(prog)s grover-advice --n 6,8,10 --m 40 --trials 50     # 下界扫描
  %(prog)s ensemble --k 1 --n 8 --assert                   # k=1 碰撞统计
  %(prog)s gnm --catalog-id symmetric --params '[4]'       # GNM 协议
  %(prog)s report results/*.json                           # 汇总记录
        """
    )
    subparsers = parser.add_subparsers(dest="command", help="可用命令")

    grover = subparsers.add_parser("grover-advice", parents=[common], help="带经典建议的标记态搜索扫描")
    grover.add_argument("--n", dest="n_values", type=_int_list, help="查询寄存器比特数列表")
    grover.add_argument("--m", dest="m_values", type=_int_list, help="见证长度列表")
    grover.add_argument("--budgets", type=_int_list, help="查询预算列表")
    grover.add_argument("--dense", dest="dense_budgets", action="store_true", default=None,
                        help="取 1..满预算的全部预算")
    grover.add_argument("--hybrid", action="store_true", default=None, help="同时记录混合论证统计")

    hybrid = subparsers.add_parser("hybrid", parents=[common], help="混合论证逐步距离")
    hybrid.add_argument("--n", type=int)
    hybrid.add_argument("--iterations", type=int)
    hybrid.add_argument("--algorithm", choices=["grover", "amplify", "prepare"])
    hybrid.add_argument("--m", type=int)

    ensemble = subparsers.add_parser("ensemble", parents=[common], help="伪随机态系综的碰撞统计")
    ensemble.add_argument("--n", type=int)
    ensemble.add_argument("--k", type=int)
    ensemble.add_argument("--samples", type=int)
    ensemble.add_argument("--ensemble", choices=["sigma", "haar", "prepared"])
    ensemble.add_argument("--precision", type=int)

    randstate = subparsers.add_parser("randstate", parents=[common], help="随机态制备")
    randstate.add_argument("--n", type=int)
    randstate.add_argument("--precision", type=int)
    randstate.add_argument("--max-attempts", type=int)

    gnm = subparsers.add_parser("gnm", parents=[common], help="群非成员 QCMA 协议")
    gnm.add_argument("--catalog-id", choices=["cyclic", "dihedral", "symmetric", "abelian2", "quaternion"])
    gnm.add_argument("--params", type=_json_value, help="目录参数 (JSON 列表)")
    gnm.add_argument("--h", type=_json_value, help="H 的生成元 (JSON 列表)")
    gnm.add_argument("--x", type=_json_value, help="待判定元素 (JSON)")
    gnm.add_argument("--kernel-mode", choices=["ehk", "exhaustive"])
    gnm.add_argument("--cheating", type=int, help="作弊见证数")
    gnm.add_argument("--r", type=int, help="自纠正重复参数")

    affine = subparsers.add_parser("affine-check", parents=[common], help="仿射酉族结构检查")
    affine.add_argument("--family", choices=["pauli", "diagonal"])
    affine.add_argument("--N", type=int)
    affine.add_argument("--extensions", type=int)

    report = subparsers.add_parser("report", parents=[common], help="汇总 JSON 运行记录")
    report.add_argument("records", nargs="+", help="JSON 记录文件")

    return parser


GLOBAL_KEYS = ("config", "seed", "trials", "out", "threads", "assert_criteria", "log_level", "command")


def experiment_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """命令行参数 → 实验配置覆盖项"""
    values = vars(args)
    overrides: Dict[str, Any] = {
        "seed": values.get("seed"),
        "trials": values.get("trials"),
        "output": values.get("out"),
        "threads": values.get("threads"),
    }
    for key, value in values.items():
        if key not in GLOBAL_KEYS and key != "records":
            overrides[key] = value
    return overrides


# ==================== 子命令 ====================

def cmd_experiment(runner: ExperimentRunner, config: Config, args: argparse.Namespace) -> int:
    """执行实验子命令"""
    exp = build_experiment_config(args.command, config, experiment_overrides(args))
    record = runner.run(exp)

    print(f"\n实验 {record.experiment} ({record.config_hash[:12]}) 完成，用时 {record.wall_time:.2f}s")
    print("-" * 80)
    print(format_table(record.rows[:40]))
    if len(record.rows) > 40:
        print(f"... 共 {len(record.rows)} 行")
    for failure in record.failures:
        print(f"  判据未满足: {failure}")

    if getattr(args, "assert_criteria", False):
        runner.check(record)
    return EXIT_OK


def cmd_report(runner: ExperimentRunner, args: argparse.Namespace) -> int:
    """执行汇总命令"""
    try:
        records = runner.load_records(args.records)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"无法读取运行记录: {e}") from e
    summary = runner.report(records)

    print("\n运行概览:")
    print(format_table(summary["overview"]))
    if summary["sweep"]:
        print("\n下界扫描 (n, m, T, success):")
        print(format_table([{k: row[k] for k in ("n", "m", "T", "success")} for row in summary["sweep"]]))
        print("\n阈值 T*:")
        print(format_table(summary["thresholds"]))
    exponent = summary["scaling_exponent"]
    if exponent is not None:
        print(f"\nT* 对 sqrt(2^n/(m+1)) 的拟合指数: {exponent:.3f}")

    out = getattr(args, "out", None)
    if out:
        runner.write_report(summary, out)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """
    主入口函数

    Returns:
        退出代码：0 成功，1 判据未满足或运行失败，2 配置错误
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_OK

    try:
        config = load_config(getattr(args, "config", None))
    except ConfigError as e:
        print(f"配置错误: {e}", file=sys.stderr)
        return EXIT_CONFIG

    initialize_logging(config, getattr(args, "log_level", None))
    logger = Logger.get_logger(__name__)
    runner = ExperimentRunner(config)

    try:
        if args.command == "report":
            return cmd_report(runner, args)
        if args.command in EXPERIMENT_IDS:
            return cmd_experiment(runner, config, args)
        parser.print_help()
        return EXIT_OK

    except ConfigError as e:
        logger.error(f"配置错误: {e}")
        return EXIT_CONFIG

    except CriteriaError as e:
        logger.error(f"判据检查失败: {e}")
        return EXIT_CRITERIA

    except Exception as e:
        logger.error(f"执行失败: {e}", exc_info=True)
        return EXIT_CRITERIA

    finally:
        logger.info("实验室退出")


if __name__ == "__main__":
    sys.exit(main())
