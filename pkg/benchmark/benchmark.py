import time
import os
import sys
import statistics
import io
from contextlib import redirect_stdout

# Add the parent directory to the path so we can import essopt
sys.path.insert(0, os.path.abspath(os.path.dirname(os.path.dirname(__file__))))

from essopt.branch_and_bound import solve
from essopt.fixtures import generate_week
from essopt.formulation import Instance, Weights, build_model
from essopt.milp import SolverConfig
from essopt.oracle import certify, random_instance
from essopt.strategy import baseline_schedule

# Resolutions to time: steps per day
RESOLUTIONS = [12, 24, 48, 96]

# Weight sets every resolution is solved under
SCENARIOS = [
    {"name": "Economic", "weights": Weights(1.0, 0.0, 0.0)},
    {"name": "Balanced", "weights": Weights(0.4, 0.3, 0.3)},
    {"name": "Absorption", "weights": Weights(0.2, 0.1, 0.7)},
]


def build_instance(steps_per_day, weights, seed=0):
    pv, load = generate_week(seed=seed, steps_per_day=steps_per_day, days=1)
    return Instance(pv.horizon, pv, load, weights=weights)


def measure_solves(steps_per_day, repeats=3, config=None):
    """Time model building and solving for every scenario at one resolution."""
    try:
        import psutil
        process = psutil.Process(os.getpid())
    except ImportError:
        process = None

    results = {"steps_per_day": steps_per_day, "scenarios": {}, "memory_usage": []}

    for scenario in SCENARIOS:
        name = scenario["name"]
        print(f"Benchmarking N={steps_per_day} - {name}")
        instance = build_instance(steps_per_day, scenario["weights"])

        build_times, solve_times, nodes = [], [], []
        for _ in range(repeats):
            start_time = time.perf_counter()
            model, _ = build_model(instance)
            build_times.append(time.perf_counter() - start_time)

            start_time = time.perf_counter()
            solution = solve(model, config)
            solve_times.append(time.perf_counter() - start_time)
            nodes.append(solution.stats.nodes)

            if process is not None:
                results["memory_usage"].append(process.memory_info().rss / (1024 * 1024))  # MB

        results["scenarios"][name] = {
            "status": solution.status.value,
            "build_time": statistics.mean(build_times),
            "avg_time": statistics.mean(solve_times),
            "max_time": max(solve_times),
            "nodes": statistics.mean(nodes),
            "variables": len(model.variables),
            "constraints": len(model.constraints),
        }

    print(f"\nN={steps_per_day} Results:")
    for name, stats in results["scenarios"].items():
        print(f"  {name}:")
        print(f"    Model size: {stats['variables']} variables, {stats['constraints']} constraints")
        print(f"    Average build time: {stats['build_time']:.6f} seconds")
        print(f"    Average solve time: {stats['avg_time']:.6f} seconds (max {stats['max_time']:.6f})")
        print(f"    Average nodes: {stats['nodes']:.1f} ({stats['status']})")

    if results["memory_usage"]:
        print(f"Average memory usage: {statistics.mean(results['memory_usage']):.2f} MB")

    return results


def measure_baseline(steps_per_day=96, repeats=20):
    """Time the peak-valley baseline over a full week."""
    pv, load = generate_week(seed=0, steps_per_day=steps_per_day)
    instance = Instance(pv.horizon, pv, load)
    times = []
    for _ in range(repeats):
        start_time = time.perf_counter()
        baseline_schedule(instance)
        times.append(time.perf_counter() - start_time)
    print(f"\nBaseline week at N={steps_per_day}: {statistics.mean(times):.6f} seconds on average")


def measure_certification(seeds=20):
    """Time the oracle certification suite."""
    times = []
    for seed in range(seeds):
        start_time = time.perf_counter()
        certify(random_instance(seed))
        times.append(time.perf_counter() - start_time)
    print(f"\nCertification of {seeds} instances: {sum(times):.3f} seconds total")
    if len(times) >= 20:
        print(f"  95th percentile per instance: {statistics.quantiles(times, n=20)[18]:.6f} seconds")


def main():
    try:
        import psutil  # noqa: F401
    except ImportError:
        print("psutil is not installed, memory usage will not be reported. Install it with:")
        print("pip install psutil")

    config = SolverConfig()
    results = {}

    for steps_per_day in RESOLUTIONS:
        print(f"\n=== Benchmarking N={steps_per_day} ===")
        results[steps_per_day] = measure_solves(steps_per_day, config=config)

    measure_baseline()
    measure_certification()

    # Compare results against the coarsest resolution
    print("\n=== Scaling Results ===")
    coarse = results[RESOLUTIONS[0]]
    for steps_per_day, result in results.items():
        if steps_per_day == RESOLUTIONS[0]:
            continue
        print(f"\nN={steps_per_day} vs N={RESOLUTIONS[0]} solve time ratios:")
        for name in coarse["scenarios"]:
            ratio = result["scenarios"][name]["avg_time"] / coarse["scenarios"][name]["avg_time"]
            print(f"  {name}: {ratio:.2f}x")


if __name__ == "__main__":
    # Create output file path in the benchmark folder
    benchmark_dir = os.path.dirname(os.path.abspath(__file__))
    output_file = os.path.join(benchmark_dir, "benchmark_results.txt")

    # Capture output to both console and file
    f = io.StringIO()
    with redirect_stdout(f):
        main()

    output = f.getvalue()
    print(output)

    with open(output_file, 'w') as file:
        file.write(output)

    print(f"\nBenchmark results written to: {output_file}")
