#pragma once

#include "ngp/errors.hpp"
#include "ngp/kernels.hpp"
#include "ngp/fd_oracle.hpp"
#include "ngp/operators.hpp"
#include "ngp/block_kernel.hpp"
#include "ngp/optimize.hpp"
#include "ngp/gp.hpp"
#include "ngp/schemes.hpp"
#include "ngp/quadrature.hpp"
#include "ngp/problems.hpp"
#include "ngp/driver.hpp"
#include "ngp/io.hpp"
