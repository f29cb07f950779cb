"""Benchmark the jit-compiled kernels against the pure-python fallback.

Builds a few evolved genomes, then times full forward+backward sweeps over a
random input series with both kernel implementations.  Run from the repo
root:

    python3 benchmarks/kernel_benchmark.py
    python3 benchmarks/kernel_benchmark.py --steps 500 --repeats 30
"""

import argparse
import time

import numpy as np

from evornn import kernels
from evornn.evolution import MUTATION_OPERATORS, OPERATORS, OperatorConfig
from evornn.genome import InnovationRegistry, randomize_weights, seed_genome
from evornn.network import compile_network


def evolved_genome(rng, n_inputs, n_outputs, n_mutations):
    registry = InnovationRegistry()
    config = OperatorConfig()
    g = seed_genome(n_inputs, n_outputs, registry, rng)
    randomize_weights(g, rng)
    applied = 0
    while applied < n_mutations:
        name = MUTATION_OPERATORS[int(rng.integers(len(MUTATION_OPERATORS)))]
        child = OPERATORS[name](g, config, registry, rng)
        if child is not None:
            g = child
            applied += 1
    return g


def sweep(net, x, fwd, bwd):
    states, cell_states, store = kernels.run_forward(net, x, kernel=fwd)
    d_states = np.zeros_like(states)
    d_states[:, net.output_idx] = 1.0
    grad = kernels.run_backward(net, net.weights, states, cell_states, store,
                                d_states, kernel=bwd)
    return float(states[-1, net.output_idx[0]]), float(grad.sum())


def time_kernel(label, net, x, fwd, bwd, repeats, warmup=3):
    for _ in range(warmup):
        check = sweep(net, x, fwd, bwd)
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        sweep(net, x, fwd, bwd)
        times.append(time.perf_counter() - start)
    times.sort()
    median = times[len(times) // 2]
    print(f"  {label:<12} median {median * 1e3:8.3f} ms   "
          f"best {times[0] * 1e3:8.3f} ms")
    return median, check


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=300,
                        help="sequence length")
    parser.add_argument("--inputs", type=int, default=8)
    parser.add_argument("--mutations", type=int, default=40,
                        help="structural mutations applied to the benchmark "
                             "genome")
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    genome = evolved_genome(rng, args.inputs, 1, args.mutations)
    net = compile_network(genome)
    x = rng.uniform(-1, 1, (args.steps, args.inputs))
    n_nodes = sum(1 for n in genome.nodes if n.enabled)
    print(f"genome: {n_nodes} enabled nodes, "
          f"{sum(1 for e in genome.edges if e.enabled)} edges, "
          f"{sum(1 for e in genome.recurrent_edges if e.enabled)} recurrent, "
          f"{net.weights.size} weights; series {args.steps} x {args.inputs}")

    py, check_py = time_kernel("python", net, x,
                               kernels.forward_pass_python,
                               kernels.backward_pass_python, args.repeats)
    if kernels.forward_pass_numba is None:
        print("numba kernels unavailable (not installed or disabled via "
              f"{kernels.DISABLE_ENV}); nothing to compare")
        return
    jit, check_jit = time_kernel("numba", net, x,
                                 kernels.forward_pass_numba,
                                 kernels.backward_pass_numba, args.repeats)
    assert check_py == check_jit, "kernel outputs diverged"
    print(f"  speedup      {py / jit:8.1f}x  (outputs bit-identical)")
    default = "numba" if kernels.NUMBA_ACTIVE else "python"
    print(f"  engine default kernel: {default} "
          f"(toggle with {kernels.DISABLE_ENV}=1)")


if __name__ == "__main__":
    main()
