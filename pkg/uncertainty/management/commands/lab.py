import json
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError
from joblib import Parallel, delayed

from env_settings import EnvSettings
from log_app.services import write_log
from uncertainty.exceptions import LabError, ScenarioError
from uncertainty.runner import RunResult, default_scenario, execute, execute_isolated, resolve_scenario
from uncertainty.serializers import COMMANDS, scenario_schema, validate_scenario
from uncertainty.storage import write_report

# 結束碼：1 = 用法或輸入錯誤，2 = 有不等式檢查沒通過
EXIT_USAGE = 1
EXIT_BOUND_FAILED = 2

# CLI 旗標 → 子命令參數
PARAMETER_FLAGS = {
    'sequential': {'probe_a': 'probe_a', 'coupling': 'coupling', 'epsilons': 'epsilons'},
    'arthurs-kelly': {'coupling': 'lam', 'kappa': 'kappa', 'gammas': 'gammas', 'probe1_a': 'probe1_a',
                      'probe2_a': 'probe2_a', 'simulate': 'simulate'},
    'werner-constant': {'basis_size': 'basis_size', 'budget': 'budget', 'starts': 'starts'},
    'landau-pollak': {'epsilon': 'epsilon'},
    'covariant': {'epsilons': 'epsilons'},
    'overall-width': {'random_states': 'random_states'},
    'prep-ur': {'random_states': 'random_states'},
}


class Command(BaseCommand):
    help = "執行不確定關係的數值實驗情境，輸出報告並檢查所有不等式"

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest='subcommand', required=True)
        for command in (*COMMANDS, 'suite'):
            sub = subparsers.add_parser(command)
            sub.add_argument('--config', type=Path, help="情境 JSON 檔")
            sub.add_argument('--out', type=Path, help="輸出目錄")
            sub.add_argument('--seed', type=int, help="亂數種子")
            sub.add_argument('--hbar', type=float, help="ħ")
            sub.add_argument('--jobs', type=int, help="平行工作數")
            self._add_parameter_flags(command, sub)
        subparsers.add_parser('schema')

    @staticmethod
    def _add_parameter_flags(command, sub):
        if command in ('sequential', 'arthurs-kelly'):
            sub.add_argument('--lambda', dest='coupling', type=float, help="耦合 λ")
        if command == 'sequential':
            sub.add_argument('--probe-a', dest='probe_a', type=float, help="探針 η_a 的 a")
        if command in ('sequential', 'covariant'):
            sub.add_argument('--epsilons', nargs=2, type=float, metavar=('EPS1', 'EPS2'))
        if command == 'arthurs-kelly':
            sub.add_argument('--kappa', type=float)
            sub.add_argument('--gamma', dest='gammas', nargs='+', type=float, help="一個或多個 γ")
            sub.add_argument('--probe1-a', dest='probe1_a', type=float)
            sub.add_argument('--probe2-a', dest='probe2_a', type=float)
            mode = sub.add_mutually_exclusive_group()
            mode.add_argument('--simulate', dest='simulate', action='store_const', const=True,
                              help="做三體模擬 (覆寫情境檔的 simulate)")
            mode.add_argument('--analytic-only', dest='simulate', action='store_const', const=False,
                              help="只算解析公式，不做三體模擬")
        if command == 'werner-constant':
            sub.add_argument('--basis-size', dest='basis_size', type=int)
            sub.add_argument('--budget', type=int)
            sub.add_argument('--starts', type=int)
        if command == 'landau-pollak':
            sub.add_argument('--epsilon', type=float)
        if command in ('prep-ur', 'overall-width'):
            sub.add_argument('--random-states', dest='random_states', type=int)

    def handle(self, *args, **options):
        subcommand = options['subcommand']
        if subcommand == 'schema':
            self.stdout.write(json.dumps(scenario_schema(), indent=2, ensure_ascii=False))
            return

        env = EnvSettings()
        jobs = options.get('jobs') or env.JOBS
        try:
            if subcommand == 'suite':
                raws = [default_scenario(command) for command in COMMANDS]
            else:
                raws = [self._load_raw(subcommand, options)]
            scenarios = []
            for raw in raws:
                self._apply_overrides(raw, options)
                scenarios.append(resolve_scenario(validate_scenario(raw), env))
        except ScenarioError as e:
            write_log('ERROR', f"scenario-{subcommand}", f"invalid scenario: {e}")
            raise CommandError(f"invalid scenario: {e}", returncode=EXIT_USAGE)

        if subcommand == 'suite':
            results = self._run_suite(scenarios, jobs)
        else:
            results = [self._run_one(scenarios[0], jobs)]

        out_root = options.get('out') or Path(scenarios[0].get('output') or env.OUTPUT_DIR)
        failed, errored = 0, 0
        for result in results:
            if result.report is None:
                errored += 1
                continue
            failed += self._record(result, out_root)

        if errored:
            raise CommandError(f"{errored} scenario(s) stopped with an error", returncode=EXIT_USAGE)
        if failed:
            raise CommandError(f"{failed} bound check(s) failed", returncode=EXIT_BOUND_FAILED)
        self.stdout.write(self.style.SUCCESS(f"all checks passed, output in {out_root}"))

    @staticmethod
    def _load_raw(subcommand: str, options: dict) -> dict:
        path = options.get('config')
        if path is None:
            return default_scenario(subcommand)
        try:
            raw = json.loads(Path(path).read_text(encoding='utf-8'))
        except OSError as e:
            raise ScenarioError(f"cannot read {path}: {e}", field='config') from e
        except json.JSONDecodeError as e:
            raise ScenarioError(f"{path} is not valid JSON: {e}", field='config') from e
        if not isinstance(raw, dict):
            raise ScenarioError(f"{path} must contain a JSON object", field='config')
        raw.setdefault('command', subcommand)
        raw.setdefault('name', subcommand)
        if raw['command'] != subcommand:
            raise ScenarioError(f"scenario is for {raw['command']!r}, not {subcommand!r}", field='command')
        return raw

    @staticmethod
    def _apply_overrides(raw: dict, options: dict) -> None:
        """CLI 旗標優先於情境檔"""
        for key in ('seed', 'hbar'):
            if options.get(key) is not None:
                raw[key] = options[key]
        parameters = dict(raw.get('parameters') or {})
        for flag, name in PARAMETER_FLAGS.get(raw.get('command'), {}).items():
            if options.get(flag) is not None:
                parameters[name] = options[flag]
        raw['parameters'] = parameters

    def _run_one(self, scenario: dict, jobs: int) -> RunResult:
        name = scenario['name']
        write_log('INFO', f"scenario-{scenario['command']}", f"{name} started", scenario=name)
        try:
            return execute(scenario, jobs=jobs)
        except LabError as e:
            write_log('ERROR', f"scenario-{scenario['command']}", f"{name} failed: {type(e).__name__}: {e}",
                      scenario=name, exc=True)
            return RunResult(scenario=scenario, error=str(e), error_type=type(e).__name__)

    def _run_suite(self, scenarios: list[dict], jobs: int) -> list[RunResult]:
        write_log('INFO', 'suite', f"suite started: {len(scenarios)} scenarios, jobs={jobs}")
        # worker 只做計算，檔案與 Log 都在主 process 寫
        results = Parallel(n_jobs=jobs)(delayed(execute_isolated)(scenario) for scenario in scenarios)
        for result in results:
            if result.error:
                write_log('ERROR', 'suite', f"{result.scenario['name']} failed: {result.error_type}: {result.error}",
                          scenario=result.scenario['name'], tb=result.traceback)
        return results

    def _record(self, result: RunResult, out_root: Path) -> int:
        report = result.report
        command = result.scenario['command']
        name = report.name
        for message in result.warnings:
            write_log('WARNING', 'warning', f"{name}: {message}", scenario=name)
        for message in result.diagnostics:
            write_log('INFO', 'conjecture', f"{name}: {message}", scenario=name)
        if command == 'werner-constant':
            q = report.quantities
            write_log('INFO', 'werner-search',
                      f"{name}: C estimate {q['c_est']:.6g} after {q['evaluations']} evaluations, "
                      f"excited mass {q['excited_mass']:.3g}", scenario=name)

        target = write_report(report, out_root)
        failures = report.failed_checks()
        for c in failures:
            write_log('ERROR', f"scenario-{command}",
                      f"{name}: {c.tag} [{c.label}] failed: {c.lhs:.9g} {c.relation} {c.rhs:.9g} (tol {c.tol:.3g})",
                      scenario=name)
        write_log('INFO', f"scenario-{command}",
                  f"{name}: {len(report.checks)} checks, {len(failures)} failed, written to {target}", scenario=name)
        return len(failures)
