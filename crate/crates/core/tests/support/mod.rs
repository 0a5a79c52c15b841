pub mod st_oracle;
