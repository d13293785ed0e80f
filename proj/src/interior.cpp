#include "ll/interior.hpp"
