#include "ll/io.hpp"
