package com.example.app15;

public class Store {
    private String name = "item 115";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 115);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
