#pragma once
#include "ll/gff.hpp"
#include "ll/sle.hpp"
