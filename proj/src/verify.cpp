#include "ll/verify.hpp"
