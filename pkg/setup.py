from setuptools import Extension, setup
from Cython.Build import cythonize

# -ffp-contract=off keeps the compiled coverage predicate bit-identical to the
# numpy fallback (no fused multiply-add in the distance test).
extensions = [
    Extension(
        "fracperc._cover",
        ["src/fracperc/_cover.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
