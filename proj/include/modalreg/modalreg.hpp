#pragma once

#include <modalreg/bandwidth.hpp>
#include <modalreg/clustering.hpp>
#include <modalreg/data.hpp>
#include <modalreg/density.hpp>
#include <modalreg/error.hpp>
#include <modalreg/experiments.hpp>
#include <modalreg/inference.hpp>
#include <modalreg/io.hpp>
#include <modalreg/kernel.hpp>
#include <modalreg/modes.hpp>
#include <modalreg/parallel.hpp>
#include <modalreg/prediction.hpp>
#include <modalreg/random.hpp>
#include <modalreg/reports.hpp>
#include <modalreg/ridge.hpp>
#include <modalreg/set_metrics.hpp>
#include <modalreg/synthdata.hpp>
