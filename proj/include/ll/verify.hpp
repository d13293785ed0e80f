#pragma once
#include "ll/stats.hpp"
