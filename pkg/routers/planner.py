import argparse

from routers.common import emit
from services.ams_service import ams_exponents, plan_parameters


def register(subparsers, common: argparse.ArgumentParser):
    """註冊漸近公式相關命令（o(1) 項省略，輸出標記為 asymptotic）"""
    parser = subparsers.add_parser(
        "plan",
        parents=[common],
        help="由目標傳輸率指數 δ 推出 C、n 與 M/N 下界",
        description=(
            "C = ⌈10.5^{2/δ}⌉，n = 2C，ε = 1/(2C⁴ ln C)，M/N ≥ 2K^{−ε}。"
            "K 過大無法表示，因此輸出 ln K 與 ln(M/N 下界)。δ = 1 視為 δ→1⁻。"
        ),
    )
    parser.add_argument("--delta", type=float, required=True, help="傳輸率指數 δ ∈ (0, 1]")
    parser.set_defaults(handler=handle_plan)

    parser = subparsers.add_parser(
        "exponents",
        parents=[common],
        help="匹配數指數 f 與缺邊數指數 g",
        description="f = 1 + 2 ln 10.5 / ln C，g = 2 − 1/(2C⁴ ln C)。",
    )
    parser.add_argument("--c", type=int, required=True, help="字母表大小 C ≥ 2")
    parser.set_defaults(handler=handle_exponents)


def handle_plan(args: argparse.Namespace) -> int:
    result = plan_parameters(args.delta)
    text = f"C={result.C} n_min={result.n_min} ln_K={result.ln_K:.1f} epsilon={result.epsilon:.3e}"
    emit(args, result, text)
    return 0


def handle_exponents(args: argparse.Namespace) -> int:
    result = ams_exponents(args.c)
    emit(args, result, f"f={result.f:.4f} g={result.g:.5f}")
    return 0
