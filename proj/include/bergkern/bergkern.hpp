#pragma once

#include "core.hpp"
#include "geometry.hpp"
#include "polynomial.hpp"
#include "model_kernel.hpp"
#include "kernel_calculus.hpp"
#include "torus_model.hpp"
#include "bergman.hpp"
#include "toeplitz.hpp"
#include "io.hpp"
#include "cli.hpp"
