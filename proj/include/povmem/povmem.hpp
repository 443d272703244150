#pragma once

#include "povmem/errors.hpp"
#include "povmem/field_core.hpp"
#include "povmem/fourier_optics.hpp"
#include "povmem/density_matrix.hpp"
#include "povmem/vector_state.hpp"
#include "povmem/storage_channel.hpp"
#include "povmem/measurement_tomo.hpp"
