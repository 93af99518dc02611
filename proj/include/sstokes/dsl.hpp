// dsl.hpp
// Circuit description language: parse -> compile -> run.

#pragma once

#include "sstokes/dsl/parser.hpp"
#include "sstokes/dsl/program.hpp"
