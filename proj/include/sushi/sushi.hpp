#pragma once

#include <sushi/assembly.hpp>
#include <sushi/discrete_space.hpp>
#include <sushi/errors.hpp>
#include <sushi/gradient.hpp>
#include <sushi/log.hpp>
#include <sushi/mesh.hpp>
#include <sushi/mesh_gen.hpp>
#include <sushi/parallel.hpp>
#include <sushi/postproc.hpp>
#include <sushi/problems.hpp>
#include <sushi/regularity.hpp>
#include <sushi/run.hpp>
#include <sushi/solver.hpp>
