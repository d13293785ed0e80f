#pragma once
#include "ll/interior.hpp"
